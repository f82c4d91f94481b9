#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "neurotrack/core/error.hpp"

namespace neurotrack::speechfeat {

enum class TrackLevel { kPhoneme, kWord };

inline std::string to_string(TrackLevel level) {
  return level == TrackLevel::kPhoneme ? "phoneme" : "word";
}

struct AlignedToken {
  std::string symbol;
  double onset_s = 0.0;
  double offset_s = 0.0;
};

// Ordered token list (phonemes or words) with onset/offset times.
struct AlignmentTrack {
  TrackLevel level = TrackLevel::kWord;
  std::vector<AlignedToken> tokens;
  double duration_s = 0.0;

  void validate() const {
    double prev_onset = -1.0;
    for (const auto& tok : tokens) {
      detail::require(tok.onset_s >= 0.0 && tok.onset_s < tok.offset_s &&
                          tok.offset_s <= duration_s + 1e-9,
                      "AlignmentTrack: token outside [0, duration]");
      detail::require(tok.onset_s > prev_onset, "AlignmentTrack: onsets not strictly increasing");
      prev_onset = tok.onset_s;
    }
  }

  std::vector<std::string> symbols() const {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const auto& tok : tokens) out.push_back(tok.symbol);
    return out;
  }
};

// Tab-separated track file: level, symbol, onset_s, offset_s. One file can
// carry both levels; the reader filters.
inline void write_alignment_tracks(const std::vector<AlignmentTrack>& tracks,
                                   const std::filesystem::path& path) {
  std::ofstream out(path);
  detail::ensure(out.is_open(), "cannot open for writing: " + path.string());
  out.precision(12);
  for (const auto& track : tracks) {
    for (const auto& tok : track.tokens) {
      out << to_string(track.level) << '\t' << tok.symbol << '\t' << tok.onset_s << '\t'
          << tok.offset_s << '\n';
    }
  }
  detail::ensure(static_cast<bool>(out), "write failed: " + path.string());
}

inline AlignmentTrack read_alignment_track(const std::filesystem::path& path,
                                           TrackLevel level, double duration_s) {
  std::ifstream in(path);
  detail::ensure(in.is_open(), "cannot open for reading: " + path.string());
  AlignmentTrack track;
  track.level = level;
  track.duration_s = duration_s;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string level_str, symbol, onset, offset;
    detail::ensure(static_cast<bool>(std::getline(row, level_str, '\t')) &&
                       static_cast<bool>(std::getline(row, symbol, '\t')) &&
                       static_cast<bool>(std::getline(row, onset, '\t')) &&
                       static_cast<bool>(std::getline(row, offset, '\t')),
                   "malformed alignment row: " + line);
    if (level_str != to_string(level)) continue;
    track.tokens.push_back({symbol, std::stod(onset), std::stod(offset)});
  }
  track.validate();
  return track;
}

}  // namespace neurotrack::speechfeat
