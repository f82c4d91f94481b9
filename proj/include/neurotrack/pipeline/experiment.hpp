#pragma once

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "neurotrack/pipeline/config.hpp"
#include "neurotrack/pipeline/manifest.hpp"
#include "neurotrack/pipeline/stages.hpp"

namespace neurotrack::pipeline {

inline const std::vector<std::string>& all_stages() {
  static const std::vector<std::string> stages = {"simulate", "preprocess", "features", "train",
                                                  "evaluate",  "classify",  "sweep",   "report"};
  return stages;
}

inline const std::map<std::string, std::vector<std::string>>& stage_dependencies() {
  static const std::map<std::string, std::vector<std::string>> deps = {
      {"simulate", {}},
      {"preprocess", {"simulate"}},
      {"features", {"simulate"}},
      {"train", {"features"}},
      {"evaluate", {"preprocess", "features", "train"}},
      {"classify", {"evaluate"}},
      {"sweep", {"evaluate"}},
      {"report", {"classify", "sweep"}},
  };
  return deps;
}

struct StageOutcome {
  std::string name;
  bool ran = false;  // false: manifest record still valid, stage skipped
  double wall_ms = 0.0;
};

using StageFn = std::vector<std::string> (*)(const ExperimentConfig&, const RunPaths&,
                                             std::size_t);

inline StageFn stage_fn(const std::string& name) {
  static const std::map<std::string, StageFn> fns = {
      {"simulate", &stage_simulate}, {"preprocess", &stage_preprocess},
      {"features", &stage_features}, {"train", &stage_train},
      {"evaluate", &stage_evaluate}, {"classify", &stage_classify},
      {"sweep", &stage_sweep},       {"report", &stage_report},
  };
  const auto it = fns.find(name);
  detail::require(it != fns.end(), "unknown stage: " + name);
  return it->second;
}

// Execute the requested stages in canonical order. A stage whose manifest
// record matches the current config hash (and whose artifacts still exist)
// is skipped. Dependencies must either be valid on disk or run earlier in
// this same invocation; otherwise DependencyError names the missing stage
// before any work starts.
inline std::vector<StageOutcome> run_stages(const ExperimentConfig& cfg,
                                            std::vector<std::string> requested = {}) {
  if (requested.empty()) requested = all_stages();
  for (const auto& name : requested) stage_fn(name);  // reject unknown names up front

  const RunPaths paths{cfg.out_dir};
  std::filesystem::create_directories(paths.root);
  auto manifest = load_manifest(paths.root);
  const auto hash = cfg.semantic_hash_hex();
  manifest.tool_version = kToolVersion;
  manifest.config_hash = hash;

  // Plan first so a dependency hole aborts before hours of compute.
  std::vector<std::pair<std::string, bool>> plan;  // stage, will_run
  std::set<std::string> available;
  for (const auto& name : all_stages()) {
    if (std::find(requested.begin(), requested.end(), name) == requested.end()) continue;
    const bool satisfied = stage_satisfied(manifest, paths.root, name, hash);
    if (!satisfied)
      for (const auto& dep : stage_dependencies().at(name))
        if (!available.count(dep) && !stage_satisfied(manifest, paths.root, dep, hash))
          throw DependencyError("stage '" + name + "' requires '" + dep + "'");
    plan.emplace_back(name, !satisfied);
    available.insert(name);
  }

  std::vector<StageOutcome> outcomes;
  for (const auto& [name, will_run] : plan) {
    StageOutcome out;
    out.name = name;
    if (will_run) {
      const auto t0 = std::chrono::steady_clock::now();
      auto artifacts = stage_fn(name)(cfg, paths, cfg.jobs);
      const auto t1 = std::chrono::steady_clock::now();
      out.ran = true;
      out.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
      manifest.stages[name] = {"done", out.wall_ms, hash, std::move(artifacts)};
      save_manifest(manifest, paths.root);
    }
    outcomes.push_back(std::move(out));
  }
  return outcomes;
}

}  // namespace neurotrack::pipeline
