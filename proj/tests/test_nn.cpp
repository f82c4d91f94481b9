#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <vector>

#include "neurotrack/core/rng.hpp"
#include "neurotrack/mmtask/pairs.hpp"
#include "neurotrack/nn/adam.hpp"
#include "neurotrack/nn/checkpoint.hpp"
#include "neurotrack/nn/data.hpp"
#include "neurotrack/nn/layers.hpp"
#include "neurotrack/nn/model.hpp"
#include "neurotrack/nn/train.hpp"

namespace nn = neurotrack::nn;
namespace mm = neurotrack::mmtask;
namespace sf = neurotrack::speechfeat;
using neurotrack::MultichannelSignal;
using neurotrack::Rng;

namespace {

nn::ModelConfig tiny_config() {
  nn::ModelConfig cfg;
  cfg.eeg_channels = 4;
  cfg.spatial_filters = 2;
  cfg.temporal_filters = 3;
  cfg.kernel_width = 3;
  cfg.dilations = {1, 2};
  cfg.window = 16;
  return cfg;
}

nn::Example random_example(const nn::ModelConfig& cfg, Rng& rng, bool dual, double label) {
  nn::Example ex;
  ex.channels = cfg.eeg_channels;
  ex.window = cfg.window;
  ex.label = label;
  ex.eeg.resize(cfg.eeg_channels * cfg.window);
  for (auto& v : ex.eeg) v = rng.normal();
  ex.c1_a.resize(cfg.window);
  ex.c2_a.resize(cfg.window);
  for (auto& v : ex.c1_a) v = rng.normal();
  for (auto& v : ex.c2_a) v = rng.normal();
  if (dual) {
    ex.c1_b.resize(cfg.window);
    ex.c2_b.resize(cfg.window);
    for (auto& v : ex.c1_b) v = rng.normal();
    for (auto& v : ex.c2_b) v = rng.normal();
  }
  return ex;
}

double batch_loss(nn::MatchMismatchModel& model, const std::vector<nn::Example>& batch) {
  double loss = 0.0;
  for (const auto& ex : batch) loss += nn::bce_loss(model.forward(ex), ex.label);
  return loss / static_cast<double>(batch.size());
}

// Central finite differences over every parameter, compared to backprop.
void check_gradients(nn::MatchMismatchModel& model, const std::vector<nn::Example>& batch) {
  model.zero_grad();
  for (const auto& ex : batch) {
    const double p = model.forward(ex);
    model.backward((p - ex.label) / static_cast<double>(batch.size()));
  }
  std::vector<double> analytic;
  model.visit_params([&](double*, double* g, std::size_t n) {
    analytic.insert(analytic.end(), g, g + n);
  });

  const double h = 1e-5;
  std::size_t idx = 0;
  double worst = 0.0;
  model.visit_params([&](double* w, double*, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i, ++idx) {
      const double keep = w[i];
      w[i] = keep + h;
      const double up = batch_loss(model, batch);
      w[i] = keep - h;
      const double down = batch_loss(model, batch);
      w[i] = keep;
      const double fd = (up - down) / (2.0 * h);
      const double rel =
          std::abs(fd - analytic[idx]) / std::max(1e-8, std::abs(fd) + std::abs(analytic[idx]));
      worst = std::max(worst, rel);
      EXPECT_LT(rel, 1e-4) << "param " << idx << " fd " << fd << " bp " << analytic[idx];
    }
  });
  SUCCEED() << "worst relative error " << worst;
}

}  // namespace

TEST(Conv1D, IdentityKernelPassesInputThrough) {
  nn::Conv1D layer(1, 1, 1, 1, /*relu=*/false);
  layer.visit_params([](double* w, double*, std::size_t n) {
    if (n == 1) w[0] = 1.0;  // both weight and bias blocks have size 1; set both
  });
  // visit order is weights then bias; re-set explicitly:
  double* blocks[2];
  std::size_t bi = 0;
  layer.visit_params([&](double* w, double*, std::size_t) { blocks[bi++] = w; });
  blocks[0][0] = 1.0;
  blocks[1][0] = 0.0;

  const std::vector<double> input = {0.5, -1.25, 3.0, 0.0, 7.5};
  nn::Conv1D::Cache cache;
  layer.forward(input.data(), input.size(), cache);
  ASSERT_EQ(cache.output.size(), input.size());
  for (std::size_t t = 0; t < input.size(); ++t) EXPECT_DOUBLE_EQ(cache.output[t], input[t]);
}

TEST(Conv1D, HandComputedDifferenceKernel) {
  nn::Conv1D layer(1, 1, 2, 1, /*relu=*/false);
  double* blocks[2];
  std::size_t bi = 0;
  layer.visit_params([&](double* w, double*, std::size_t) { blocks[bi++] = w; });
  blocks[0][0] = 1.0;
  blocks[0][1] = -1.0;
  blocks[1][0] = 0.0;
  const std::vector<double> input = {1.0, 2.0, 3.0, 4.0};
  nn::Conv1D::Cache cache;
  layer.forward(input.data(), 4, cache);
  ASSERT_EQ(cache.output.size(), 3u);
  EXPECT_DOUBLE_EQ(cache.output[0], -1.0);
  EXPECT_DOUBLE_EQ(cache.output[1], -1.0);
  EXPECT_DOUBLE_EQ(cache.output[2], -1.0);
}

TEST(Conv1D, DilatedOutputLengthMatchesBruteForce) {
  Rng rng(99);
  nn::Conv1D layer(2, 1, 3, 3, /*relu=*/false);
  layer.init_glorot(rng);
  EXPECT_EQ(layer.out_len(64), 58u);

  std::vector<double> input(2 * 64);
  for (auto& v : input) v = rng.normal();
  nn::Conv1D::Cache cache;
  layer.forward(input.data(), 64, cache);

  // Brute-force index enumeration.
  std::vector<double> w;
  double bias = 0.0;
  std::size_t bi = 0;
  layer.visit_params([&](double* p, double*, std::size_t n) {
    if (bi++ == 0)
      w.assign(p, p + n);
    else
      bias = p[0];
  });
  for (std::size_t t = 0; t < 58; ++t) {
    double expect = bias;
    for (std::size_t c = 0; c < 2; ++c)
      for (std::size_t k = 0; k < 3; ++k) expect += w[c * 3 + k] * input[c * 64 + t + 3 * k];
    EXPECT_NEAR(cache.output[t], expect, 1e-12);
  }
}

TEST(Conv1D, GradientZeroBeyondReceptiveField) {
  Rng rng(7);
  nn::Conv1D layer(1, 1, 3, 2, /*relu=*/false);  // receptive field 5
  layer.init_glorot(rng);
  std::vector<double> input(20);
  for (auto& v : input) v = rng.normal();
  nn::Conv1D::Cache cache;
  layer.forward(input.data(), 20, cache);

  // Gradient of out[0] alone: only samples 0, 2, 4 are read.
  std::vector<double> d_out(layer.out_len(20), 0.0);
  d_out[0] = 1.0;
  std::vector<double> d_in(20);
  layer.zero_grad();
  layer.backward(cache, d_out.data(), d_in.data());
  for (std::size_t t = 0; t < 20; ++t) {
    if (t == 0 || t == 2 || t == 4)
      EXPECT_NE(d_in[t], 0.0);
    else
      EXPECT_DOUBLE_EQ(d_in[t], 0.0);
  }
}

TEST(Conv1D, RejectsTooShortInput) {
  nn::Conv1D layer(1, 1, 3, 9, false);  // receptive field 19
  EXPECT_THROW(layer.out_len(18), neurotrack::InvalidArgument);
}

TEST(CosineSim, CanonicalCases) {
  const std::size_t f = 4, t = 2;
  std::vector<double> a = {1, 0, 0, 1, 2, 2, 3, -4};
  std::vector<double> b = {1, 0, 0, -1, -2, -2, 0, 0};
  // rows: identical; orthogonal? a1=(0,1), b1=(0,-1) antiparallel; a2=(2,2), b2=(-2,-2);
  // a3=(3,-4), b3=(0,0) zero-norm
  nn::CosineSim::Cache cache;
  nn::CosineSim::forward(a.data(), b.data(), f, t, cache);
  EXPECT_DOUBLE_EQ(cache.sims[0], 1.0);
  EXPECT_DOUBLE_EQ(cache.sims[1], -1.0);
  EXPECT_DOUBLE_EQ(cache.sims[2], -1.0);
  EXPECT_DOUBLE_EQ(cache.sims[3], 0.0);

  std::vector<double> ortho_a = {1, 0}, ortho_b = {0, 1};
  nn::CosineSim::forward(ortho_a.data(), ortho_b.data(), 1, 2, cache);
  EXPECT_DOUBLE_EQ(cache.sims[0], 0.0);
}

TEST(ModelForward, OutputInUnitIntervalAndSwapInvariantForIdenticalCandidates) {
  const auto cfg = tiny_config();
  nn::SingleFeatureModel model(cfg, 42);
  Rng rng(1);
  auto ex = random_example(cfg, rng, false, 1.0);
  ex.c2_a = ex.c1_a;  // identical candidates
  const double p1 = model.forward(ex);
  EXPECT_GT(p1, 0.0);
  EXPECT_LT(p1, 1.0);
  std::swap(ex.c1_a, ex.c2_a);
  const double p2 = model.forward(ex);
  EXPECT_DOUBLE_EQ(p1, p2);
}

TEST(ModelForward, ZeroHeadGivesExactlyHalf) {
  const auto cfg = tiny_config();
  nn::SingleFeatureModel model(cfg, 42);
  auto params = model.get_params();
  // Head is the last parameter block: 2F weights + 1 bias.
  const std::size_t head = 2 * cfg.temporal_filters + 1;
  for (std::size_t i = params.size() - head; i < params.size(); ++i) params[i] = 0.0;
  model.set_params(params);
  Rng rng(2);
  const auto ex = random_example(cfg, rng, false, 1.0);
  EXPECT_DOUBLE_EQ(model.forward(ex), 0.5);
}

TEST(Gradients, SingleFeatureModelMatchesFiniteDifferences) {
  const auto cfg = tiny_config();
  nn::SingleFeatureModel model(cfg, 2024);
  Rng rng(11);
  std::vector<nn::Example> batch = {random_example(cfg, rng, false, 1.0),
                                    random_example(cfg, rng, false, 0.0)};
  check_gradients(model, batch);
}

TEST(Gradients, DualFeatureModelMatchesFiniteDifferences) {
  const auto cfg = tiny_config();
  nn::DualFeatureModel model(cfg, 2025);
  Rng rng(12);
  std::vector<nn::Example> batch = {random_example(cfg, rng, true, 0.0),
                                    random_example(cfg, rng, true, 1.0)};
  check_gradients(model, batch);
}

TEST(Gradients, ZeroLossGradientWhenPredictionExact) {
  const auto cfg = tiny_config();
  nn::SingleFeatureModel model(cfg, 5);
  Rng rng(13);
  const auto ex = random_example(cfg, rng, false, 1.0);
  model.zero_grad();
  model.forward(ex);
  model.backward(0.0);  // dL/dz = p - y = 0 when the probability is exact
  model.visit_params([&](double*, double* g, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) EXPECT_DOUBLE_EQ(g[i], 0.0);
  });
}

TEST(Adam, FirstStepMovesByLearningRateTimesSign) {
  const auto cfg = tiny_config();
  nn::SingleFeatureModel model(cfg, 3);
  const auto before = model.get_params();
  nn::AdamConfig acfg;
  nn::Adam adam(model, acfg);
  // Plant gradients of varying magnitude and sign.
  std::size_t idx = 0;
  model.visit_params([&](double*, double* g, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i, ++idx) g[i] = (idx % 2 == 0) ? 0.5 : -2.0;
  });
  adam.step(model);
  const auto after = model.get_params();
  idx = 0;
  for (std::size_t i = 0; i < after.size(); ++i, ++idx) {
    const double expected = (idx % 2 == 0) ? -acfg.lr : acfg.lr;
    EXPECT_NEAR(after[i] - before[i], expected, 1e-6 * acfg.lr * 10.0);
  }
}

TEST(Adam, ZeroGradientIsFixedPoint) {
  const auto cfg = tiny_config();
  nn::SingleFeatureModel model(cfg, 4);
  const auto before = model.get_params();
  nn::Adam adam(model);
  model.zero_grad();
  for (int i = 0; i < 25; ++i) adam.step(model);
  const auto after = model.get_params();
  for (std::size_t i = 0; i < after.size(); ++i) EXPECT_DOUBLE_EQ(after[i], before[i]);
}

namespace {

// Synthetic learnable-by-construction dataset: the feature is a noiseless
// linear mixture of the EEG channels.
struct OracleData {
  MultichannelSignal eeg{1, 1, 64.0};
  sf::FeatureStream feature;
  std::vector<mm::SegmentPair> pairs;
};

OracleData make_oracle_data(std::size_t channels, double duration_s, std::uint64_t seed,
                            double window_s = 2.0) {
  Rng rng(seed);
  const auto n = static_cast<std::size_t>(duration_s * 64.0);
  OracleData out;
  out.eeg = MultichannelSignal(channels, n, 64.0);
  // Smooth-ish random EEG: AR(1) per channel.
  for (std::size_t c = 0; c < channels; ++c) {
    double prev = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      prev = 0.7 * prev + rng.normal();
      out.eeg.at(c, t) = prev;
    }
  }
  MultichannelSignal feat(1, n, 64.0);
  std::vector<double> mix(channels);
  for (auto& m : mix) m = rng.normal();
  for (std::size_t t = 0; t < n; ++t) {
    double v = 0.0;
    for (std::size_t c = 0; c < channels; ++c) v += mix[c] * out.eeg.at(c, t);
    feat.at(0, t) = v;
  }
  out.feature = {"env_broad", std::move(feat)};
  out.pairs = mm::make_pairs(out.eeg, out.feature, {window_s, window_s, 1.0}, "oracle");
  return out;
}

nn::ModelConfig oracle_config(std::size_t channels, double window_s) {
  nn::ModelConfig cfg;
  cfg.eeg_channels = channels;
  cfg.spatial_filters = 4;
  cfg.temporal_filters = 8;
  cfg.window = static_cast<std::size_t>(window_s * 64.0);
  return cfg;
}

}  // namespace

TEST(Training, LearnableByConstructionReachesNinetyFivePercent) {
  const std::size_t channels = 8;
  const auto data = make_oracle_data(channels, 600.0, 909);
  const auto split = mm::split_pairs(data.pairs);

  nn::PairDataset train, val, test;
  const nn::PairDataset::Source src{&data.eeg, &data.feature, nullptr};
  train.add_source(src, split.train);
  val.add_source(src, split.val);
  test.add_source(src, split.test);

  const auto cfg = oracle_config(channels, 2.0);
  nn::SingleFeatureModel model(cfg, 1234);
  nn::TrainConfig tc;
  tc.max_epochs = 20;
  tc.seed = 77;
  const auto result = nn::train_model(model, train, val, tc);
  EXPECT_LE(result.epochs_run, 20u);

  const double acc = nn::evaluate_subject(model, test);
  EXPECT_GT(acc, 0.95) << "test accuracy " << acc;

  // Optimization sanity: training loss non-increasing within tolerance in the
  // noiseless setting.
  for (std::size_t e = 1; e < result.train_loss.size(); ++e)
    EXPECT_LE(result.train_loss[e], result.train_loss[e - 1] + 1e-3) << "epoch " << e;
}

TEST(Training, ShuffledLabelsSitAtChance) {
  const std::size_t channels = 8;
  const auto data = make_oracle_data(channels, 500.0, 910);
  const auto split = mm::split_pairs(data.pairs);

  nn::PairDataset train, val, test;
  const nn::PairDataset::Source src{&data.eeg, &data.feature, nullptr};
  train.add_source(src, split.train);
  val.add_source(src, split.val);
  test.add_source(src, split.test);
  Rng shuffle_rng(4242);
  train.shuffle_labels(shuffle_rng);
  val.shuffle_labels(shuffle_rng);
  test.shuffle_labels(shuffle_rng);
  ASSERT_GE(test.size() + val.size() + train.size(), 400u);

  const auto cfg = oracle_config(channels, 2.0);
  nn::SingleFeatureModel model(cfg, 1235);
  nn::TrainConfig tc;
  tc.max_epochs = 10;
  tc.seed = 78;
  nn::train_model(model, train, val, tc);
  const double acc = nn::evaluate_subject(model, test);
  EXPECT_GE(acc, 0.45);
  EXPECT_LE(acc, 0.55);
}

namespace {

// Evaluation stubs: probe the accuracy arithmetic without a real model.
class StubModel final : public nn::MatchMismatchModel {
 public:
  enum class Mode { kPerfect, kConstantHalf, kAlwaysWrong };
  StubModel(const nn::ModelConfig& cfg, Mode mode) : cfg_(cfg), mode_(mode) {}
  double forward(const nn::Example& ex) override {
    switch (mode_) {
      case Mode::kPerfect: return ex.label > 0.5 ? 0.99 : 0.01;
      case Mode::kConstantHalf: return 0.5;
      case Mode::kAlwaysWrong: return ex.label > 0.5 ? 0.01 : 0.99;
    }
    return 0.5;
  }
  void backward(double) override {}
  void zero_grad() override {}
  void visit_params(const nn::ParamVisitor&) override {}
  const nn::ModelConfig& config() const override { return cfg_; }
  std::string architecture() const override { return "stub"; }
  bool dual() const override { return false; }

 private:
  nn::ModelConfig cfg_;
  Mode mode_;
};

}  // namespace

TEST(Evaluate, PerfectConstantAndWrongModels) {
  const auto data = make_oracle_data(4, 120.0, 911);
  nn::PairDataset all;
  all.add_source({&data.eeg, &data.feature, nullptr}, data.pairs);

  nn::ModelConfig cfg = oracle_config(4, 2.0);
  StubModel perfect(cfg, StubModel::Mode::kPerfect);
  StubModel constant(cfg, StubModel::Mode::kConstantHalf);
  StubModel wrong(cfg, StubModel::Mode::kAlwaysWrong);
  EXPECT_DOUBLE_EQ(nn::evaluate_subject(perfect, all), 1.0);
  // Swap-balanced pairs: ties predict candidate 1, correct on exactly half.
  EXPECT_DOUBLE_EQ(nn::evaluate_subject(constant, all), 0.5);
  EXPECT_DOUBLE_EQ(nn::evaluate_subject(wrong, all), 0.0);
}

TEST(Evaluate, AccuracyInvariantUnderPairReordering) {
  const auto data = make_oracle_data(4, 120.0, 912);
  nn::PairDataset forward_order, reversed;
  forward_order.add_source({&data.eeg, &data.feature, nullptr}, data.pairs);
  auto rev = data.pairs;
  std::reverse(rev.begin(), rev.end());
  reversed.add_source({&data.eeg, &data.feature, nullptr}, rev);

  nn::SingleFeatureModel model(oracle_config(4, 2.0), 99);
  EXPECT_DOUBLE_EQ(nn::evaluate_subject(model, forward_order),
                   nn::evaluate_subject(model, reversed));
}

TEST(Evaluate, EmptyPairListThrows) {
  nn::PairDataset empty;
  nn::SingleFeatureModel model(tiny_config(), 1);
  EXPECT_THROW(nn::evaluate_subject(model, empty), neurotrack::InvalidArgument);
}

TEST(Determinism, SameSeedSameWeightsAfterTraining) {
  const auto data = make_oracle_data(6, 200.0, 913);
  const auto split = mm::split_pairs(data.pairs);
  nn::PairDataset train, val;
  const nn::PairDataset::Source src{&data.eeg, &data.feature, nullptr};
  train.add_source(src, split.train);
  val.add_source(src, split.val);

  const auto cfg = oracle_config(6, 2.0);
  nn::TrainConfig tc;
  tc.max_epochs = 3;
  tc.seed = 555;

  nn::SingleFeatureModel m1(cfg, 777), m2(cfg, 777), m3(cfg, 778);
  nn::train_model(m1, train, val, tc);
  nn::train_model(m2, train, val, tc);
  nn::train_model(m3, train, val, tc);

  const auto p1 = m1.get_params(), p2 = m2.get_params(), p3 = m3.get_params();
  ASSERT_EQ(p1.size(), p2.size());
  for (std::size_t i = 0; i < p1.size(); ++i) ASSERT_EQ(p1[i], p2[i]) << i;
  bool any_diff = false;
  for (std::size_t i = 0; i < p1.size(); ++i)
    if (p1[i] != p3[i]) any_diff = true;
  EXPECT_TRUE(any_diff);
}

TEST(Checkpoint, RoundTripPreservesWeightsAndMeta) {
  const auto dir = std::filesystem::temp_directory_path() / "ntrk_nn";
  std::filesystem::create_directories(dir);
  const auto cfg = tiny_config();
  nn::DualFeatureModel model(cfg, 31415);
  nn::CheckpointMeta meta;
  meta.feature_name = "word_surprisal";
  meta.seed = 31415;
  meta.best_epoch = 7;
  meta.epochs_run = 12;
  meta.val_loss = 0.61;
  meta.val_accuracy = 0.66;
  nn::save_checkpoint(model, meta, dir / "ckpt");

  auto loaded = nn::load_checkpoint(dir / "ckpt");
  EXPECT_EQ(loaded.meta.feature_name, "word_surprisal");
  EXPECT_EQ(loaded.meta.best_epoch, 7u);
  EXPECT_EQ(loaded.model->architecture(), "dual");
  const auto p0 = model.get_params();
  const auto p1 = loaded.model->get_params();
  ASSERT_EQ(p0.size(), p1.size());
  for (std::size_t i = 0; i < p0.size(); ++i) ASSERT_EQ(p0[i], p1[i]);

  Rng rng(17);
  const auto ex = random_example(cfg, rng, true, 1.0);
  nn::DualFeatureModel& orig = model;
  EXPECT_DOUBLE_EQ(orig.forward(ex), loaded.model->forward(ex));
}

TEST(ModelForward, RejectsWrongWindowAndMissingDualFeature) {
  const auto cfg = tiny_config();
  nn::SingleFeatureModel model(cfg, 1);
  Rng rng(3);
  auto ex = random_example(cfg, rng, false, 1.0);
  ex.window = cfg.window + 1;
  EXPECT_THROW(model.forward(ex), neurotrack::InvalidArgument);

  nn::DualFeatureModel dual(cfg, 2);
  auto ex2 = random_example(cfg, rng, false, 1.0);  // no feature-B candidates
  EXPECT_THROW(dual.forward(ex2), neurotrack::InvalidArgument);
}
