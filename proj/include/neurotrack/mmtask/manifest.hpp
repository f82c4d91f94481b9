#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "neurotrack/core/error.hpp"
#include "neurotrack/mmtask/pairs.hpp"

namespace neurotrack::mmtask {

// Audit manifest: subject, feature, window starts, labels.
inline void write_pair_manifest(const std::vector<SegmentPair>& pairs,
                                const std::filesystem::path& path) {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& p : pairs) {
    doc.push_back({{"subject", p.subject_id},
                   {"feature", p.feature_name},
                   {"eeg_start", p.eeg_start},
                   {"mismatch_start", p.mismatch_start},
                   {"window", p.window},
                   {"first_is_match", p.first_is_match},
                   {"start_s", p.start_s}});
  }
  std::ofstream out(path);
  detail::ensure(out.is_open(), "cannot open for writing: " + path.string());
  out << doc.dump(2) << '\n';
  detail::ensure(static_cast<bool>(out), "write failed: " + path.string());
}

inline std::vector<SegmentPair> read_pair_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  detail::ensure(in.is_open(), "cannot open for reading: " + path.string());
  nlohmann::json doc;
  in >> doc;
  std::vector<SegmentPair> pairs;
  for (const auto& item : doc) {
    SegmentPair p;
    p.subject_id = item.at("subject").get<std::string>();
    p.feature_name = item.at("feature").get<std::string>();
    p.eeg_start = item.at("eeg_start").get<std::size_t>();
    p.mismatch_start = item.at("mismatch_start").get<std::size_t>();
    p.window = item.at("window").get<std::size_t>();
    p.first_is_match = item.at("first_is_match").get<bool>();
    p.start_s = item.at("start_s").get<double>();
    pairs.push_back(std::move(p));
  }
  return pairs;
}

}  // namespace neurotrack::mmtask
