#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "neurotrack/core/error.hpp"
#include "neurotrack/nn/model.hpp"

namespace neurotrack::nn {

static_assert(std::endian::native == std::endian::little,
              "checkpoint blob assumes a little-endian host");

// Checkpoint = <stem>.json manifest + <stem>.bin weight blob (little-endian
// 64-bit floats in the model's canonical parameter order).
struct CheckpointMeta {
  std::string feature_name;
  std::uint64_t seed = 0;
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
};

inline void save_checkpoint(MatchMismatchModel& model, const CheckpointMeta& meta,
                            const std::filesystem::path& stem) {
  const auto params = model.get_params();
  const auto& cfg = model.config();
  nlohmann::json manifest = {
      {"format", "neurotrack-checkpoint-v1"},
      {"architecture", model.architecture()},
      {"feature", meta.feature_name},
      {"seed", meta.seed},
      {"parameters", params.size()},
      {"config",
       {{"eeg_channels", cfg.eeg_channels},
        {"spatial_filters", cfg.spatial_filters},
        {"temporal_filters", cfg.temporal_filters},
        {"kernel_width", cfg.kernel_width},
        {"dilations", cfg.dilations},
        {"window", cfg.window}}},
      {"training",
       {{"best_epoch", meta.best_epoch},
        {"epochs_run", meta.epochs_run},
        {"val_loss", meta.val_loss},
        {"val_accuracy", meta.val_accuracy}}},
  };
  {
    std::ofstream out(stem.string() + ".json");
    detail::ensure(out.is_open(), "cannot write checkpoint manifest: " + stem.string());
    out << manifest.dump(2) << '\n';
  }
  std::ofstream blob(stem.string() + ".bin", std::ios::binary);
  detail::ensure(blob.is_open(), "cannot write checkpoint blob: " + stem.string());
  blob.write(reinterpret_cast<const char*>(params.data()),
             static_cast<std::streamsize>(params.size() * sizeof(double)));
  detail::ensure(static_cast<bool>(blob), "checkpoint blob write failed");
}

struct LoadedCheckpoint {
  std::unique_ptr<MatchMismatchModel> model;
  CheckpointMeta meta;
};

inline LoadedCheckpoint load_checkpoint(const std::filesystem::path& stem) {
  std::ifstream in(stem.string() + ".json");
  detail::ensure(in.is_open(), "cannot read checkpoint manifest: " + stem.string());
  nlohmann::json manifest;
  in >> manifest;
  detail::require(manifest.at("format") == "neurotrack-checkpoint-v1",
                  "unrecognized checkpoint format");

  ModelConfig cfg;
  const auto& jc = manifest.at("config");
  cfg.eeg_channels = jc.at("eeg_channels").get<std::size_t>();
  cfg.spatial_filters = jc.at("spatial_filters").get<std::size_t>();
  cfg.temporal_filters = jc.at("temporal_filters").get<std::size_t>();
  cfg.kernel_width = jc.at("kernel_width").get<std::size_t>();
  cfg.dilations = jc.at("dilations").get<std::vector<std::size_t>>();
  cfg.window = jc.at("window").get<std::size_t>();

  LoadedCheckpoint out;
  out.meta.feature_name = manifest.at("feature").get<std::string>();
  out.meta.seed = manifest.at("seed").get<std::uint64_t>();
  out.meta.best_epoch = manifest.at("training").at("best_epoch").get<std::size_t>();
  out.meta.epochs_run = manifest.at("training").at("epochs_run").get<std::size_t>();
  out.meta.val_loss = manifest.at("training").at("val_loss").get<double>();
  out.meta.val_accuracy = manifest.at("training").at("val_accuracy").get<double>();
  out.model = make_model(manifest.at("architecture").get<std::string>(), cfg, out.meta.seed);

  const auto n = manifest.at("parameters").get<std::size_t>();
  detail::require(n == out.model->param_count(), "checkpoint parameter count mismatch");
  std::vector<double> params(n);
  std::ifstream blob(stem.string() + ".bin", std::ios::binary);
  detail::ensure(blob.is_open(), "cannot read checkpoint blob: " + stem.string());
  blob.read(reinterpret_cast<char*>(params.data()),
            static_cast<std::streamsize>(n * sizeof(double)));
  detail::ensure(blob.gcount() == static_cast<std::streamsize>(n * sizeof(double)),
                 "checkpoint blob truncated");
  out.model->set_params(params);
  return out;
}

}  // namespace neurotrack::nn
