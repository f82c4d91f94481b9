#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "neurotrack/core/error.hpp"
#include "neurotrack/pipeline/config.hpp"

namespace neurotrack::pipeline {

// A requested stage whose prerequisite has neither run nor been requested.
// Mapped to exit code 2 by the CLI.
class DependencyError : public std::runtime_error {
 public:
  explicit DependencyError(const std::string& msg) : std::runtime_error(msg) {}
};

struct StageRecord {
  std::string status = "pending";  // pending | done
  double wall_ms = 0.0;
  std::string config_hash;  // hash the stage last completed under
  std::vector<std::string> artifacts;  // paths relative to the run directory
};

// Per-run bookkeeping: which stages completed under which config hash.
// Timing fields are informational only and never hashed or compared.
struct RunManifest {
  std::string tool_version = kToolVersion;
  std::string config_hash;
  std::map<std::string, StageRecord> stages;
};

inline std::filesystem::path manifest_path(const std::filesystem::path& run_dir) {
  return run_dir / "manifest.json";
}

inline void save_manifest(const RunManifest& m, const std::filesystem::path& run_dir) {
  nlohmann::json j;
  j["format"] = "neurotrack-manifest-v1";
  j["tool_version"] = m.tool_version;
  j["config_hash"] = m.config_hash;
  auto& stages = j["stages"] = nlohmann::json::object();
  for (const auto& [name, rec] : m.stages) {
    stages[name] = {{"status", rec.status},
                    {"wall_ms", rec.wall_ms},
                    {"config_hash", rec.config_hash},
                    {"artifacts", rec.artifacts}};
  }
  std::filesystem::create_directories(run_dir);
  std::ofstream out(manifest_path(run_dir));
  detail::require(out.good(), "save_manifest: cannot write " + manifest_path(run_dir).string());
  out << j.dump(2) << '\n';
  detail::ensure(out.good(), "save_manifest: write failed");
}

// Missing manifest is not an error: a fresh run directory starts empty.
inline RunManifest load_manifest(const std::filesystem::path& run_dir) {
  RunManifest m;
  std::ifstream in(manifest_path(run_dir));
  if (!in.good()) return m;
  nlohmann::json j = nlohmann::json::parse(in);
  detail::require(j.at("format") == "neurotrack-manifest-v1",
                  "load_manifest: unknown manifest format");
  m.tool_version = j.at("tool_version").get<std::string>();
  m.config_hash = j.at("config_hash").get<std::string>();
  for (const auto& [name, rec] : j.at("stages").items()) {
    StageRecord r;
    r.status = rec.at("status").get<std::string>();
    r.wall_ms = rec.at("wall_ms").get<double>();
    r.config_hash = rec.at("config_hash").get<std::string>();
    r.artifacts = rec.at("artifacts").get<std::vector<std::string>>();
    m.stages[name] = r;
  }
  return m;
}

// A stage counts as satisfied only if it completed under the current config
// hash and every artifact it claims still exists on disk.
inline bool stage_satisfied(const RunManifest& m, const std::filesystem::path& run_dir,
                            const std::string& stage, const std::string& config_hash) {
  const auto it = m.stages.find(stage);
  if (it == m.stages.end()) return false;
  if (it->second.status != "done" || it->second.config_hash != config_hash) return false;
  for (const auto& rel : it->second.artifacts)
    if (!std::filesystem::exists(run_dir / rel)) return false;
  return true;
}

}  // namespace neurotrack::pipeline
