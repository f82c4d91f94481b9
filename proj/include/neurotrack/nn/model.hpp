#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "neurotrack/core/error.hpp"
#include "neurotrack/core/rng.hpp"
#include "neurotrack/nn/layers.hpp"

namespace neurotrack::nn {

// Hyperparameters shared by both architectures. Defaults follow the dilation
// model lineage: spatial 64 -> 8, three dilated temporal convolutions.
struct ModelConfig {
  std::size_t eeg_channels = 64;
  std::size_t spatial_filters = 8;
  std::size_t temporal_filters = 16;
  std::size_t kernel_width = 3;
  std::vector<std::size_t> dilations = {1, 3, 9};
  std::size_t window = 320;  // samples at 64 Hz

  std::size_t context() const {
    std::size_t c = 0;
    for (auto d : dilations) c += (kernel_width - 1) * d;
    return c;
  }
  std::size_t embedding_len() const {
    detail::require(window > context(), "ModelConfig: window shorter than receptive field");
    return window - context();
  }
};

// One example as dense tensors. Feature B candidates are empty for
// single-feature models.
struct Example {
  std::vector<double> eeg;  // channels x window
  std::vector<double> c1_a, c2_a;
  std::vector<double> c1_b, c2_b;
  std::size_t channels = 0;
  std::size_t window = 0;
  double label = 0.0;  // 1.0 when candidate 1 matches the EEG
};

namespace detail {

using neurotrack::detail::ensure;
using neurotrack::detail::require;

// EEG stream (spatial + temporal stack) and speech stream (temporal stack)
// for one speech feature.
struct FeatureSubnet {
  Conv1D spatial;
  std::vector<Conv1D> eeg_temporal;
  std::vector<Conv1D> speech_temporal;

  explicit FeatureSubnet(const ModelConfig& cfg)
      : spatial(cfg.eeg_channels, cfg.spatial_filters, 1, 1, /*relu=*/false) {
    std::size_t in = cfg.spatial_filters;
    for (auto d : cfg.dilations) {
      eeg_temporal.emplace_back(in, cfg.temporal_filters, cfg.kernel_width, d, /*relu=*/true);
      in = cfg.temporal_filters;
    }
    in = 1;
    for (auto d : cfg.dilations) {
      speech_temporal.emplace_back(in, cfg.temporal_filters, cfg.kernel_width, d, /*relu=*/true);
      in = cfg.temporal_filters;
    }
  }

  void init(Rng& rng) {
    spatial.init_glorot(rng);
    for (auto& l : eeg_temporal) l.init_glorot(rng);
    for (auto& l : speech_temporal) l.init_glorot(rng);
  }

  void zero_grad() {
    spatial.zero_grad();
    for (auto& l : eeg_temporal) l.zero_grad();
    for (auto& l : speech_temporal) l.zero_grad();
  }

  void visit_params(const ParamVisitor& fn) {
    spatial.visit_params(fn);
    for (auto& l : eeg_temporal) l.visit_params(fn);
    for (auto& l : speech_temporal) l.visit_params(fn);
  }

  struct StreamCache {
    std::vector<Conv1D::Cache> layers;
  };

  // Runs input (in_c x t) through a conv stack; returns pointer to final output.
  static const std::vector<double>& run_stack(const std::vector<Conv1D>& stack,
                                              const double* input, std::size_t t,
                                              StreamCache& cache) {
    cache.layers.resize(stack.size());
    const double* cur = input;
    std::size_t cur_t = t;
    for (std::size_t i = 0; i < stack.size(); ++i) {
      stack[i].forward(cur, cur_t, cache.layers[i]);
      cur_t = stack[i].out_len(cur_t);
      cur = cache.layers[i].output.data();
    }
    return cache.layers.back().output;
  }

  // Backward through a conv stack; d_out is the gradient at the stack output.
  // Returns gradient w.r.t. the stack input.
  static std::vector<double> back_stack(std::vector<Conv1D>& stack, StreamCache& cache,
                                        std::vector<double> d_out) {
    for (std::size_t i = stack.size(); i-- > 0;) {
      std::vector<double> d_in(stack[i].in_channels() * cache.layers[i].t_in);
      stack[i].backward(cache.layers[i], d_out.data(), d_in.data());
      d_out = std::move(d_in);
    }
    return d_out;
  }
};

}  // namespace detail

// Common interface consumed by the trainer and evaluator. forward() caches
// activations for a subsequent backward(); models are single-threaded.
class MatchMismatchModel {
 public:
  virtual ~MatchMismatchModel() = default;
  virtual double forward(const Example& ex) = 0;
  virtual void backward(double dz) = 0;  // dz = dL/dlogit of last forward
  virtual void zero_grad() = 0;
  virtual void visit_params(const ParamVisitor& fn) = 0;
  virtual const ModelConfig& config() const = 0;
  virtual std::string architecture() const = 0;
  virtual bool dual() const = 0;

  std::size_t param_count() {
    std::size_t n = 0;
    visit_params([&](double*, double*, std::size_t c) { n += c; });
    return n;
  }
  std::vector<double> get_params() {
    std::vector<double> out;
    visit_params([&](double* w, double*, std::size_t c) { out.insert(out.end(), w, w + c); });
    return out;
  }
  void set_params(const std::vector<double>& flat) {
    std::size_t off = 0;
    visit_params([&](double* w, double*, std::size_t c) {
      detail::require(off + c <= flat.size(), "set_params: size mismatch");
      std::copy(flat.begin() + static_cast<std::ptrdiff_t>(off),
                flat.begin() + static_cast<std::ptrdiff_t>(off + c), w);
      off += c;
    });
    detail::require(off == flat.size(), "set_params: size mismatch");
  }
};

// Fig. 1B single-feature network: EEG and speech streams meet in per-filter
// cosine similarities for both candidates; a dense sigmoid reads out the
// match probability for candidate 1.
class SingleFeatureModel final : public MatchMismatchModel {
 public:
  SingleFeatureModel(const ModelConfig& cfg, std::uint64_t seed)
      : cfg_(cfg), subnet_(cfg), head_(2 * cfg.temporal_filters) {
    Rng rng(seed);
    subnet_.init(rng);
    head_.init_glorot(rng);
  }

  double forward(const Example& ex) override {
    check_example(ex, cfg_, /*dual=*/false);
    const std::size_t t = cfg_.window;
    subnet_.spatial.forward(ex.eeg.data(), t, spatial_cache_);
    const auto& eeg_emb = detail::FeatureSubnet::run_stack(
        subnet_.eeg_temporal, spatial_cache_.output.data(), t, eeg_cache_);
    const auto& c1_emb =
        detail::FeatureSubnet::run_stack(subnet_.speech_temporal, ex.c1_a.data(), t, c1_cache_);
    const auto& c2_emb =
        detail::FeatureSubnet::run_stack(subnet_.speech_temporal, ex.c2_a.data(), t, c2_cache_);

    const std::size_t f = cfg_.temporal_filters;
    const std::size_t te = cfg_.embedding_len();
    CosineSim::forward(eeg_emb.data(), c1_emb.data(), f, te, sim1_cache_);
    CosineSim::forward(eeg_emb.data(), c2_emb.data(), f, te, sim2_cache_);
    std::vector<double> sims(2 * f);
    std::copy(sim1_cache_.sims.begin(), sim1_cache_.sims.end(), sims.begin());
    std::copy(sim2_cache_.sims.begin(), sim2_cache_.sims.end(), sims.begin() + f);
    return head_.forward(sims.data(), head_cache_);
  }

  void backward(double dz) override {
    const std::size_t f = cfg_.temporal_filters;
    const std::size_t te = cfg_.embedding_len();
    std::vector<double> d_sims(2 * f);
    head_.backward(head_cache_, dz, d_sims.data());

    std::vector<double> d_eeg1(f * te), d_c1(f * te), d_eeg2(f * te), d_c2(f * te);
    CosineSim::backward(sim1_cache_, d_sims.data(), d_eeg1.data(), d_c1.data());
    CosineSim::backward(sim2_cache_, d_sims.data() + f, d_eeg2.data(), d_c2.data());
    for (std::size_t i = 0; i < d_eeg1.size(); ++i) d_eeg1[i] += d_eeg2[i];

    auto d_spatial_out =
        detail::FeatureSubnet::back_stack(subnet_.eeg_temporal, eeg_cache_, std::move(d_eeg1));
    std::vector<double> d_eeg_in(cfg_.eeg_channels * cfg_.window);
    subnet_.spatial.backward(spatial_cache_, d_spatial_out.data(), d_eeg_in.data());
    detail::FeatureSubnet::back_stack(subnet_.speech_temporal, c1_cache_, std::move(d_c1));
    detail::FeatureSubnet::back_stack(subnet_.speech_temporal, c2_cache_, std::move(d_c2));
  }

  void zero_grad() override {
    subnet_.zero_grad();
    head_.zero_grad();
  }
  void visit_params(const ParamVisitor& fn) override {
    subnet_.visit_params(fn);
    head_.visit_params(fn);
  }
  const ModelConfig& config() const override { return cfg_; }
  std::string architecture() const override { return "single"; }
  bool dual() const override { return false; }

  static void check_example(const Example& ex, const ModelConfig& cfg, bool dual) {
    detail::require(ex.window == cfg.window, "model: wrong window length");
    detail::require(ex.channels == cfg.eeg_channels, "model: wrong channel count");
    detail::require(ex.eeg.size() == cfg.eeg_channels * cfg.window, "model: bad EEG tensor");
    detail::require(ex.c1_a.size() == cfg.window && ex.c2_a.size() == cfg.window,
                    "model: bad candidate tensor");
    if (dual)
      detail::require(ex.c1_b.size() == cfg.window && ex.c2_b.size() == cfg.window,
                      "model: dual model needs feature B candidates");
  }

 private:
  ModelConfig cfg_;
  detail::FeatureSubnet subnet_;
  DenseSigmoid head_;

  Conv1D::Cache spatial_cache_;
  detail::FeatureSubnet::StreamCache eeg_cache_, c1_cache_, c2_cache_;
  CosineSim::Cache sim1_cache_, sim2_cache_;
  DenseSigmoid::Cache head_cache_;
};

// Dual-feature network: the single-feature body is duplicated per feature
// (independent weights); all four similarity vectors feed one sigmoid head.
class DualFeatureModel final : public MatchMismatchModel {
 public:
  DualFeatureModel(const ModelConfig& cfg, std::uint64_t seed)
      : cfg_(cfg), subnet_a_(cfg), subnet_b_(cfg), head_(4 * cfg.temporal_filters) {
    Rng rng(seed);
    subnet_a_.init(rng);
    subnet_b_.init(rng);
    head_.init_glorot(rng);
  }

  double forward(const Example& ex) override {
    SingleFeatureModel::check_example(ex, cfg_, /*dual=*/true);
    const std::size_t t = cfg_.window;
    const std::size_t f = cfg_.temporal_filters;
    const std::size_t te = cfg_.embedding_len();

    forward_half(subnet_a_, ex.eeg, ex.c1_a, ex.c2_a, t, half_a_);
    forward_half(subnet_b_, ex.eeg, ex.c1_b, ex.c2_b, t, half_b_);

    std::vector<double> sims(4 * f);
    std::copy(half_a_.sim1.sims.begin(), half_a_.sim1.sims.end(), sims.begin());
    std::copy(half_a_.sim2.sims.begin(), half_a_.sim2.sims.end(), sims.begin() + f);
    std::copy(half_b_.sim1.sims.begin(), half_b_.sim1.sims.end(), sims.begin() + 2 * f);
    std::copy(half_b_.sim2.sims.begin(), half_b_.sim2.sims.end(), sims.begin() + 3 * f);
    (void)te;
    return head_.forward(sims.data(), head_cache_);
  }

  void backward(double dz) override {
    const std::size_t f = cfg_.temporal_filters;
    std::vector<double> d_sims(4 * f);
    head_.backward(head_cache_, dz, d_sims.data());
    backward_half(subnet_a_, half_a_, d_sims.data());
    backward_half(subnet_b_, half_b_, d_sims.data() + 2 * f);
  }

  void zero_grad() override {
    subnet_a_.zero_grad();
    subnet_b_.zero_grad();
    head_.zero_grad();
  }
  void visit_params(const ParamVisitor& fn) override {
    subnet_a_.visit_params(fn);
    subnet_b_.visit_params(fn);
    head_.visit_params(fn);
  }
  const ModelConfig& config() const override { return cfg_; }
  std::string architecture() const override { return "dual"; }
  bool dual() const override { return true; }

 private:
  struct HalfCache {
    Conv1D::Cache spatial;
    detail::FeatureSubnet::StreamCache eeg, c1, c2;
    CosineSim::Cache sim1, sim2;
  };

  void forward_half(detail::FeatureSubnet& net, const std::vector<double>& eeg,
                    const std::vector<double>& c1, const std::vector<double>& c2,
                    std::size_t t, HalfCache& cache) {
    net.spatial.forward(eeg.data(), t, cache.spatial);
    const auto& eeg_emb = detail::FeatureSubnet::run_stack(net.eeg_temporal,
                                                           cache.spatial.output.data(), t,
                                                           cache.eeg);
    const auto& c1_emb =
        detail::FeatureSubnet::run_stack(net.speech_temporal, c1.data(), t, cache.c1);
    const auto& c2_emb =
        detail::FeatureSubnet::run_stack(net.speech_temporal, c2.data(), t, cache.c2);
    const std::size_t f = cfg_.temporal_filters;
    const std::size_t te = cfg_.embedding_len();
    CosineSim::forward(eeg_emb.data(), c1_emb.data(), f, te, cache.sim1);
    CosineSim::forward(eeg_emb.data(), c2_emb.data(), f, te, cache.sim2);
  }

  void backward_half(detail::FeatureSubnet& net, HalfCache& cache, const double* d_sims) {
    const std::size_t f = cfg_.temporal_filters;
    const std::size_t te = cfg_.embedding_len();
    std::vector<double> d_eeg1(f * te), d_c1(f * te), d_eeg2(f * te), d_c2(f * te);
    CosineSim::backward(cache.sim1, d_sims, d_eeg1.data(), d_c1.data());
    CosineSim::backward(cache.sim2, d_sims + f, d_eeg2.data(), d_c2.data());
    for (std::size_t i = 0; i < d_eeg1.size(); ++i) d_eeg1[i] += d_eeg2[i];
    auto d_spatial_out =
        detail::FeatureSubnet::back_stack(net.eeg_temporal, cache.eeg, std::move(d_eeg1));
    std::vector<double> d_eeg_in(cfg_.eeg_channels * cfg_.window);
    net.spatial.backward(cache.spatial, d_spatial_out.data(), d_eeg_in.data());
    detail::FeatureSubnet::back_stack(net.speech_temporal, cache.c1, std::move(d_c1));
    detail::FeatureSubnet::back_stack(net.speech_temporal, cache.c2, std::move(d_c2));
  }

  ModelConfig cfg_;
  detail::FeatureSubnet subnet_a_, subnet_b_;
  DenseSigmoid head_;
  HalfCache half_a_, half_b_;
  DenseSigmoid::Cache head_cache_;
};

inline std::unique_ptr<MatchMismatchModel> make_model(const std::string& architecture,
                                                      const ModelConfig& cfg,
                                                      std::uint64_t seed) {
  if (architecture == "single") return std::make_unique<SingleFeatureModel>(cfg, seed);
  if (architecture == "dual") return std::make_unique<DualFeatureModel>(cfg, seed);
  throw InvalidArgument("unknown architecture: " + architecture);
}

}  // namespace neurotrack::nn
