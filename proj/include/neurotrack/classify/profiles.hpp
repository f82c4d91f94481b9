#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "neurotrack/core/error.hpp"
#include "neurotrack/speechfeat/features.hpp"

namespace neurotrack::classify {

// One subject's classifier input: the 11 per-feature match-mismatch
// accuracies plus age, with the group label as ground truth.
struct TrackingProfile {
  std::string subject_id;
  bool patient = false;
  double age = 0.0;
  std::map<std::string, double> accuracies;  // keyed by canonical feature name

  void validate() const {
    neurotrack::detail::require(!subject_id.empty(), "TrackingProfile: empty subject id");
    const auto& names = speechfeat::feature_names();
    neurotrack::detail::require(accuracies.size() == names.size(),
                                "TrackingProfile: expected one accuracy per canonical feature");
    for (const auto& name : names) {
      const auto it = accuracies.find(name);
      neurotrack::detail::require(it != accuracies.end(),
                                  "TrackingProfile: missing accuracy for " + name);
      neurotrack::detail::require(it->second >= 0.0 && it->second <= 1.0,
                                  "TrackingProfile: accuracy outside [0, 1] for " + name);
    }
  }
};

// Classifier feature order: the 11 canonical accuracies, then age.
inline std::vector<std::string> profile_feature_order() {
  auto names = speechfeat::feature_names();
  names.push_back("age");
  return names;
}

inline std::vector<double> profile_vector(const TrackingProfile& p) {
  p.validate();
  std::vector<double> x;
  for (const auto& name : speechfeat::feature_names()) x.push_back(p.accuracies.at(name));
  x.push_back(p.age);
  return x;
}

inline void to_matrix(const std::vector<TrackingProfile>& profiles,
                      std::vector<std::vector<double>>& x, std::vector<int>& y) {
  x.clear();
  y.clear();
  for (const auto& p : profiles) {
    x.push_back(profile_vector(p));
    y.push_back(p.patient ? 1 : -1);
  }
}

// Per-feature accuracy lists split by group, for the Wilcoxon tests.
inline void split_by_group(const std::vector<TrackingProfile>& profiles,
                           std::map<std::string, std::vector<double>>& patients,
                           std::map<std::string, std::vector<double>>& controls) {
  patients.clear();
  controls.clear();
  for (const auto& p : profiles) {
    p.validate();
    auto& dst = p.patient ? patients : controls;
    for (const auto& [name, acc] : p.accuracies) dst[name].push_back(acc);
  }
}

inline void write_profiles(const std::vector<TrackingProfile>& profiles,
                           const std::filesystem::path& path) {
  std::ofstream out(path);
  neurotrack::detail::require(out.good(), "write_profiles: cannot open " + path.string());
  out << "subject_id,group,age";
  for (const auto& name : speechfeat::feature_names()) out << ',' << name;
  out << '\n';
  out.precision(17);  // doubles survive the round trip
  for (const auto& p : profiles) {
    p.validate();
    out << p.subject_id << ',' << (p.patient ? "patient" : "control") << ',' << p.age;
    for (const auto& name : speechfeat::feature_names()) out << ',' << p.accuracies.at(name);
    out << '\n';
  }
  neurotrack::detail::ensure(out.good(), "write_profiles: write failed");
}

inline std::vector<TrackingProfile> read_profiles(const std::filesystem::path& path) {
  std::ifstream in(path);
  neurotrack::detail::require(in.good(), "read_profiles: cannot open " + path.string());
  std::string line;
  neurotrack::detail::require(static_cast<bool>(std::getline(in, line)),
                              "read_profiles: empty file");
  std::vector<std::string> header;
  {
    std::istringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  neurotrack::detail::require(header.size() == 3 + speechfeat::feature_names().size() &&
                                  header[0] == "subject_id" && header[1] == "group" &&
                                  header[2] == "age",
                              "read_profiles: unexpected header");
  std::vector<TrackingProfile> profiles;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string cell;
    TrackingProfile p;
    std::getline(ss, p.subject_id, ',');
    std::getline(ss, cell, ',');
    neurotrack::detail::require(cell == "patient" || cell == "control",
                                "read_profiles: bad group label " + cell);
    p.patient = cell == "patient";
    std::getline(ss, cell, ',');
    p.age = std::stod(cell);
    for (std::size_t j = 3; j < header.size(); ++j) {
      neurotrack::detail::require(static_cast<bool>(std::getline(ss, cell, ',')),
                                  "read_profiles: short row");
      p.accuracies[header[j]] = std::stod(cell);
    }
    p.validate();
    profiles.push_back(std::move(p));
  }
  return profiles;
}

}  // namespace neurotrack::classify
