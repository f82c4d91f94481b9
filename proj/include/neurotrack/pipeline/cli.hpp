#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "neurotrack/pipeline/experiment.hpp"

namespace neurotrack::pipeline {

namespace detail {

inline std::vector<std::string> parse_stage_list(const std::string& csv) {
  if (csv.empty() || csv == "all") return {};
  std::vector<std::string> out;
  std::istringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    require(!item.empty(), "empty stage name in --stages");
    out.push_back(item);
  }
  return out;
}

inline std::uint64_t parse_u64(const std::string& s) {
  try {
    std::size_t pos = 0;
    const auto v = std::stoull(s, &pos);
    require(pos == s.size(), "trailing junk");
    return v;
  } catch (const std::exception&) {
    throw InvalidArgument("--seed: not an unsigned integer: '" + s + "'");
  }
}

}  // namespace detail

inline void print_outcomes(const std::vector<StageOutcome>& outcomes) {
  for (const auto& o : outcomes) {
    if (o.ran)
      std::printf("stage %-10s done in %.0f ms\n", o.name.c_str(), o.wall_ms);
    else
      std::printf("stage %-10s up to date\n", o.name.c_str());
  }
}

inline void cmd_inspect(const std::filesystem::path& run_dir) {
  detail::require(std::filesystem::exists(manifest_path(run_dir)),
                  "no manifest at " + manifest_path(run_dir).string());
  const auto m = load_manifest(run_dir);
  std::cout << "manifest: " << manifest_path(run_dir).string() << '\n'
            << "tool_version: " << m.tool_version << '\n'
            << "config_hash: " << m.config_hash << '\n';
  for (const auto& name : all_stages()) {
    const auto it = m.stages.find(name);
    if (it == m.stages.end()) {
      std::cout << "stage " << name << ": pending\n";
      continue;
    }
    const auto& rec = it->second;
    std::printf("stage %s: %s (%.0f ms, config %s)\n", name.c_str(), rec.status.c_str(),
                rec.wall_ms, rec.config_hash.c_str());
    for (const auto& rel : rec.artifacts) {
      const auto path = run_dir / rel;
      if (std::filesystem::exists(path))
        std::cout << "  " << rel << "  " << detail::fmt_hex64(
                         detail::fnv1a_bytes(detail::read_text(path))) << '\n';
      else
        std::cout << "  " << rel << "  (missing)\n";
    }
  }
}

inline void cmd_report(const std::filesystem::path& run_dir) {
  const RunPaths paths{run_dir};
  const struct {
    std::filesystem::path file;
    const char* stage;
  } inputs[] = {
      {paths.eval() / "profiles.csv", "evaluate"},
      {paths.classify_dir() / "stats.json", "classify"},
      {paths.classify_dir() / "classification.json", "classify"},
      {paths.sweep_dir() / "sweep.csv", "sweep"},
  };
  for (const auto& in : inputs)
    if (!std::filesystem::exists(in.file))
      throw DependencyError("report requires '" + std::string(in.stage) + "' outputs (missing " +
                            in.file.string() + ")");
  const auto artifacts = stage_report(ExperimentConfig{}, paths, 1);
  for (const auto& rel : artifacts) std::cout << "wrote " << (run_dir / rel).string() << '\n';
}

// Entry point shared by the binary and the tests; args excludes argv[0].
inline int cli_main(const std::vector<std::string>& args) {
  CLI::App app{"EEG neural-tracking experiment pipeline"};
  app.require_subcommand(1);

  std::string config_path, stages_csv = "all", dir_arg, seed_str;
  std::size_t jobs_val = 0;

  auto* sim = app.add_subcommand("simulate", "generate the synthetic cohort only");
  auto* run = app.add_subcommand("run", "execute pipeline stages (all by default)");
  auto* rep = app.add_subcommand("report", "re-emit the figure bundle from a finished run");
  auto* ins = app.add_subcommand("inspect", "print the run manifest with artifact hashes");

  for (auto* cmd : {sim, run}) {
    cmd->add_option("--config", config_path, "experiment config file")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--jobs", jobs_val, "worker threads")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", seed_str, "override the config seed");
  }
  run->add_option("--stages", stages_csv, "comma-separated stage list (default: all)");
  for (auto* cmd : {rep, ins}) {
    cmd->add_option("dir", dir_arg, "run directory");
    cmd->add_option("--config", config_path, "experiment config file (alternative to dir)")
        ->check(CLI::ExistingFile);
  }

  {
    std::vector<const char*> argv;
    argv.push_back("ntrack");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
      app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e);
      return code == 0 ? 0 : 1;
    }
  }

  const char* env_out = std::getenv("NEUROTRACK_OUT");
  std::filesystem::path diag_dir = std::filesystem::current_path();

  const auto load_cfg = [&]() {
    auto cfg = read_config(config_path);
    if (env_out && *env_out) cfg.out_dir = env_out;
    if (!seed_str.empty()) cfg.seed = detail::parse_u64(seed_str);
    if (jobs_val > 0) cfg.jobs = jobs_val;
    diag_dir = cfg.out_dir;
    return cfg;
  };
  const auto resolve_dir = [&]() -> std::filesystem::path {
    if (!dir_arg.empty()) {
      diag_dir = dir_arg;
      return dir_arg;
    }
    detail::require(!config_path.empty(), "pass a run directory or --config");
    return load_cfg().out_dir;
  };

  try {
    if (*sim) {
      print_outcomes(run_stages(load_cfg(), {"simulate"}));
    } else if (*run) {
      print_outcomes(run_stages(load_cfg(), detail::parse_stage_list(stages_csv)));
    } else if (*rep) {
      cmd_report(resolve_dir());
    } else if (*ins) {
      cmd_inspect(resolve_dir());
    }
    return 0;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const DependencyError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    // Numerical or I/O failure partway through a run: leave a breadcrumb next
    // to the outputs so the failing stage can be diagnosed after the fact.
    const auto diag = diag_dir / "diagnostics.txt";
    try {
      std::filesystem::create_directories(diag_dir);
      detail::write_text(diag, std::string("ntrack ") + kToolVersion + " failure\n" + e.what() +
                                   "\n");
      std::cerr << "error: " << e.what() << "\ndiagnostics: " << diag.string() << '\n';
    } catch (const std::exception&) {
      std::cerr << "error: " << e.what() << '\n';
    }
    return 3;
  }
}

}  // namespace neurotrack::pipeline
