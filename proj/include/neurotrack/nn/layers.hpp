#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "neurotrack/core/error.hpp"
#include "neurotrack/core/rng.hpp"

namespace neurotrack::nn {

// Callback over (weights, gradient, count) triplets; defines the canonical
// parameter order used by Adam, checkpoints, and gradient checks.
using ParamVisitor = std::function<void(double*, double*, std::size_t)>;

// 1-D convolution, valid (no padding), optional dilation and relu.
// out[f, t] = act(bias_f + sum_{c,k} w[f,c,k] * in[c, t + k*dilation])
class Conv1D {
 public:
  Conv1D(std::size_t in_channels, std::size_t out_filters, std::size_t kernel_width,
         std::size_t dilation, bool relu)
      : in_c_(in_channels), out_f_(out_filters), k_(kernel_width), dilation_(dilation),
        relu_(relu), w_(out_filters * in_channels * kernel_width, 0.0),
        b_(out_filters, 0.0), gw_(w_.size(), 0.0), gb_(b_.size(), 0.0) {
    detail::require(dilation >= 1, "Conv1D: dilation must be >= 1");
    detail::require(in_channels > 0 && out_filters > 0 && kernel_width > 0,
                    "Conv1D: zero-sized layer");
  }

  void init_glorot(Rng& rng) {
    const double fan_in = static_cast<double>(in_c_ * k_);
    const double fan_out = static_cast<double>(out_f_ * k_);
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (auto& w : w_) w = (2.0 * rng.uniform() - 1.0) * limit;
    for (auto& b : b_) b = 0.0;
  }

  std::size_t receptive_field() const { return (k_ - 1) * dilation_ + 1; }
  std::size_t out_len(std::size_t t) const {
    detail::require(t >= receptive_field(), "Conv1D: input shorter than receptive field");
    return t - (k_ - 1) * dilation_;
  }
  std::size_t in_channels() const { return in_c_; }
  std::size_t out_filters() const { return out_f_; }
  std::size_t kernel_width() const { return k_; }
  std::size_t dilation() const { return dilation_; }
  bool relu() const { return relu_; }

  struct Cache {
    std::vector<double> input;   // in_c x T
    std::vector<double> output;  // out_f x T', post-activation
    std::size_t t_in = 0;
  };

  // input is in_c x t, row-major.
  void forward(const double* input, std::size_t t, Cache& cache) const {
    const std::size_t t_out = out_len(t);
    cache.t_in = t;
    cache.input.assign(input, input + in_c_ * t);
    cache.output.assign(out_f_ * t_out, 0.0);
    for (std::size_t f = 0; f < out_f_; ++f) {
      double* out_row = cache.output.data() + f * t_out;
      for (std::size_t tt = 0; tt < t_out; ++tt) out_row[tt] = b_[f];
      for (std::size_t c = 0; c < in_c_; ++c) {
        const double* in_row = input + c * t;
        const double* w_row = w_.data() + (f * in_c_ + c) * k_;
        for (std::size_t k = 0; k < k_; ++k) {
          const double w = w_row[k];
          const double* shifted = in_row + k * dilation_;
          for (std::size_t tt = 0; tt < t_out; ++tt) out_row[tt] += w * shifted[tt];
        }
      }
      if (relu_)
        for (std::size_t tt = 0; tt < t_out; ++tt) out_row[tt] = std::max(0.0, out_row[tt]);
    }
  }

  // d_out is out_f x T' (gradient w.r.t. post-activation output); accumulates
  // parameter gradients and writes gradient w.r.t. input into d_in (in_c x T,
  // overwritten).
  void backward(const Cache& cache, const double* d_out, double* d_in) {
    const std::size_t t = cache.t_in;
    const std::size_t t_out = out_len(t);
    std::fill(d_in, d_in + in_c_ * t, 0.0);
    std::vector<double> dz_row(t_out);
    for (std::size_t f = 0; f < out_f_; ++f) {
      const double* out_row = cache.output.data() + f * t_out;
      const double* d_row = d_out + f * t_out;
      for (std::size_t tt = 0; tt < t_out; ++tt)
        dz_row[tt] = (relu_ && out_row[tt] <= 0.0) ? 0.0 : d_row[tt];
      for (std::size_t tt = 0; tt < t_out; ++tt) gb_[f] += dz_row[tt];
      for (std::size_t c = 0; c < in_c_; ++c) {
        const double* in_row = cache.input.data() + c * t;
        double* din_row = d_in + c * t;
        double* gw_row = gw_.data() + (f * in_c_ + c) * k_;
        const double* w_row = w_.data() + (f * in_c_ + c) * k_;
        for (std::size_t k = 0; k < k_; ++k) {
          const double* shifted = in_row + k * dilation_;
          double acc = 0.0;
          for (std::size_t tt = 0; tt < t_out; ++tt) acc += dz_row[tt] * shifted[tt];
          gw_row[k] += acc;
          const double w = w_row[k];
          double* dshift = din_row + k * dilation_;
          for (std::size_t tt = 0; tt < t_out; ++tt) dshift[tt] += w * dz_row[tt];
        }
      }
    }
  }

  void zero_grad() {
    std::fill(gw_.begin(), gw_.end(), 0.0);
    std::fill(gb_.begin(), gb_.end(), 0.0);
  }

  void visit_params(const ParamVisitor& fn) {
    fn(w_.data(), gw_.data(), w_.size());
    fn(b_.data(), gb_.data(), b_.size());
  }

 private:
  std::size_t in_c_, out_f_, k_, dilation_;
  bool relu_;
  std::vector<double> w_, b_, gw_, gb_;
};

// Per-filter cosine similarity between two (F x T) maps over the time axis.
struct CosineSim {
  struct Cache {
    std::vector<double> a, b;   // F x T copies
    std::vector<double> sims;   // F
    std::vector<double> na, nb; // row norms
    std::size_t f = 0, t = 0;
  };

  static void forward(const double* a, const double* b, std::size_t f, std::size_t t,
                      Cache& cache) {
    cache.f = f;
    cache.t = t;
    cache.a.assign(a, a + f * t);
    cache.b.assign(b, b + f * t);
    cache.sims.assign(f, 0.0);
    cache.na.assign(f, 0.0);
    cache.nb.assign(f, 0.0);
    for (std::size_t i = 0; i < f; ++i) {
      const double* ra = a + i * t;
      const double* rb = b + i * t;
      double dot = 0.0, na2 = 0.0, nb2 = 0.0;
      for (std::size_t tt = 0; tt < t; ++tt) {
        dot += ra[tt] * rb[tt];
        na2 += ra[tt] * ra[tt];
        nb2 += rb[tt] * rb[tt];
      }
      cache.na[i] = std::sqrt(na2);
      cache.nb[i] = std::sqrt(nb2);
      cache.sims[i] =
          (cache.na[i] > 0.0 && cache.nb[i] > 0.0) ? dot / (cache.na[i] * cache.nb[i]) : 0.0;
    }
  }

  // d_sims is F; d_a/d_b are F x T, overwritten.
  static void backward(const Cache& cache, const double* d_sims, double* d_a, double* d_b) {
    const std::size_t f = cache.f, t = cache.t;
    for (std::size_t i = 0; i < f; ++i) {
      const double* ra = cache.a.data() + i * t;
      const double* rb = cache.b.data() + i * t;
      double* da = d_a + i * t;
      double* db = d_b + i * t;
      const double na = cache.na[i], nb = cache.nb[i], s = cache.sims[i], g = d_sims[i];
      if (na <= 0.0 || nb <= 0.0) {
        std::fill(da, da + t, 0.0);
        std::fill(db, db + t, 0.0);
        continue;
      }
      const double inv = 1.0 / (na * nb);
      for (std::size_t tt = 0; tt < t; ++tt) {
        da[tt] = g * (rb[tt] * inv - s * ra[tt] / (na * na));
        db[tt] = g * (ra[tt] * inv - s * rb[tt] / (nb * nb));
      }
    }
  }
};

// Dense layer to a single logit with sigmoid activation.
class DenseSigmoid {
 public:
  explicit DenseSigmoid(std::size_t in_dim)
      : in_dim_(in_dim), w_(in_dim, 0.0), gw_(in_dim, 0.0) {}

  void init_glorot(Rng& rng) {
    const double limit = std::sqrt(6.0 / (static_cast<double>(in_dim_) + 1.0));
    for (auto& w : w_) w = (2.0 * rng.uniform() - 1.0) * limit;
    b_ = 0.0;
  }

  struct Cache {
    std::vector<double> input;
    double p = 0.5;
  };

  double forward(const double* input, Cache& cache) const {
    cache.input.assign(input, input + in_dim_);
    double z = b_;
    for (std::size_t i = 0; i < in_dim_; ++i) z += w_[i] * input[i];
    cache.p = 1.0 / (1.0 + std::exp(-z));
    return cache.p;
  }

  // dz = dL/dz (already includes sigmoid derivative, e.g. p - y for BCE).
  void backward(const Cache& cache, double dz, double* d_in) {
    for (std::size_t i = 0; i < in_dim_; ++i) {
      gw_[i] += dz * cache.input[i];
      d_in[i] = dz * w_[i];
    }
    gb_ += dz;
  }

  void zero_grad() {
    std::fill(gw_.begin(), gw_.end(), 0.0);
    gb_ = 0.0;
  }

  void visit_params(const ParamVisitor& fn) {
    fn(w_.data(), gw_.data(), w_.size());
    fn(&b_, &gb_, 1);
  }

  std::size_t in_dim() const { return in_dim_; }

 private:
  std::size_t in_dim_;
  std::vector<double> w_, gw_;
  double b_ = 0.0, gb_ = 0.0;
};

// Mean binary cross-entropy for one example, with clamped log arguments.
inline double bce_loss(double p, double y) {
  const double eps = 1e-12;
  const double pc = std::min(1.0 - eps, std::max(eps, p));
  return -(y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc));
}

}  // namespace neurotrack::nn
