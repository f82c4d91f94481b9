#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "neurotrack/core/error.hpp"
#include "neurotrack/nn/model.hpp"

namespace neurotrack::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Standard bias-corrected Adam over a model's canonical parameter order.
class Adam {
 public:
  Adam(MatchMismatchModel& model, const AdamConfig& cfg = {}) : cfg_(cfg) {
    m_.assign(model.param_count(), 0.0);
    v_.assign(model.param_count(), 0.0);
  }

  void step(MatchMismatchModel& model) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    std::size_t off = 0;
    model.visit_params([&](double* w, double* g, std::size_t n) {
      detail::require(off + n <= m_.size(), "Adam: parameter count changed");
      for (std::size_t i = 0; i < n; ++i) {
        const double grad = g[i];
        m_[off + i] = cfg_.beta1 * m_[off + i] + (1.0 - cfg_.beta1) * grad;
        v_[off + i] = cfg_.beta2 * v_[off + i] + (1.0 - cfg_.beta2) * grad * grad;
        const double mhat = m_[off + i] / bc1;
        const double vhat = v_[off + i] / bc2;
        w[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.epsilon);
      }
      off += n;
    });
    detail::ensure(off == m_.size(), "Adam: parameter count changed");
  }

  std::uint64_t steps() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  std::vector<double> m_, v_;
  std::uint64_t t_ = 0;
};

}  // namespace neurotrack::nn
