#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "neurotrack/core/error.hpp"

namespace neurotrack::classify {

namespace detail {
using neurotrack::detail::ensure;
using neurotrack::detail::require;
}  // namespace detail

// Soft-margin RBF SVM. Inputs are standardized internally with training-fold
// statistics, which the model stores and re-applies at prediction time —
// scaling can never leak from outside the training set.
struct SvmModel {
  std::vector<std::vector<double>> support_vectors;  // standardized
  std::vector<double> dual_coef;                     // alpha_i * y_i
  double bias = 0.0;
  double gamma = 0.0;
  double c = 0.0;
  std::vector<double> feat_mean, feat_std;
  double kkt_residual = 0.0;
  double objective = 0.0;  // dual objective at the solution

  bool trained() const { return !support_vectors.empty(); }

  std::vector<double> standardize(const std::vector<double>& x) const {
    detail::require(x.size() == feat_mean.size(), "SvmModel: feature dimension mismatch");
    std::vector<double> z(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) z[j] = (x[j] - feat_mean[j]) / feat_std[j];
    return z;
  }

  double decision_score(const std::vector<double>& x) const {
    detail::require(trained(), "SvmModel: untrained model");
    const auto z = standardize(x);
    double s = bias;
    for (std::size_t i = 0; i < support_vectors.size(); ++i) {
      double d2 = 0;
      for (std::size_t j = 0; j < z.size(); ++j) {
        const double d = z[j] - support_vectors[i][j];
        d2 += d * d;
      }
      s += dual_coef[i] * std::exp(-gamma * d2);
    }
    return s;
  }

  int predict(const std::vector<double>& x) const { return decision_score(x) >= 0.0 ? 1 : -1; }
};

namespace detail {

inline double rbf(const std::vector<double>& a, const std::vector<double>& b, double gamma) {
  double d2 = 0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    d2 += d * d;
  }
  return std::exp(-gamma * d2);
}

}  // namespace detail

// Sequential minimal optimization (pairwise coordinate ascent on the dual):
// maximal-violating-pair working-set selection on the dual gradient, until
// the KKT violation gap drops below `tol`. The bias comes from the final
// gradient bracket, so the iteration itself never needs it.
inline SvmModel svm_train(const std::vector<std::vector<double>>& x_raw,
                          const std::vector<int>& y, double c, double gamma,
                          double tol = 1e-3, std::size_t max_iters = 200000) {
  const std::size_t n = x_raw.size();
  detail::require(n >= 2 && y.size() == n, "svm_train: need >= 2 examples with labels");
  detail::require(c > 0.0 && gamma > 0.0, "svm_train: C and gamma must be positive");
  const std::size_t dim = x_raw.front().size();
  detail::require(dim > 0, "svm_train: empty feature vectors");
  std::size_t n_pos = 0, n_neg = 0;
  for (int yi : y) {
    detail::require(std::abs(yi) == 1, "svm_train: labels must be +1/-1");
    (yi > 0 ? n_pos : n_neg) += 1;
  }
  detail::require(n_pos >= 2 && n_neg >= 2, "svm_train: need >= 2 examples per class");

  SvmModel model;
  model.gamma = gamma;
  model.c = c;
  model.feat_mean.assign(dim, 0.0);
  model.feat_std.assign(dim, 0.0);
  for (const auto& row : x_raw) {
    detail::require(row.size() == dim, "svm_train: ragged feature matrix");
    for (std::size_t j = 0; j < dim; ++j) model.feat_mean[j] += row[j];
  }
  for (std::size_t j = 0; j < dim; ++j) model.feat_mean[j] /= static_cast<double>(n);
  for (const auto& row : x_raw)
    for (std::size_t j = 0; j < dim; ++j) {
      const double d = row[j] - model.feat_mean[j];
      model.feat_std[j] += d * d;
    }
  for (std::size_t j = 0; j < dim; ++j) {
    model.feat_std[j] = std::sqrt(model.feat_std[j] / static_cast<double>(n));
    if (model.feat_std[j] < 1e-12) model.feat_std[j] = 1.0;  // constant feature
  }

  std::vector<std::vector<double>> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = model.standardize(x_raw[i]);

  // Precomputed kernel matrix; n stays small (cohort-sized).
  std::vector<std::vector<double>> k(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) k[i][j] = k[j][i] = detail::rbf(x[i], x[j], gamma);

  // Minimization form: minimize 1/2 a'Qa - sum a, Q_ij = y_i y_j K_ij.
  // grad_i = sum_j a_j Q_ij - 1. A point can push its -y*grad up if it is in
  // I_up, down if in I_low; optimality when the two sides bracket within tol.
  std::vector<double> alpha(n, 0.0), grad(n, -1.0);
  const auto in_up = [&](std::size_t t) {
    return (y[t] > 0 && alpha[t] < c) || (y[t] < 0 && alpha[t] > 0.0);
  };
  const auto in_low = [&](std::size_t t) {
    return (y[t] < 0 && alpha[t] < c) || (y[t] > 0 && alpha[t] > 0.0);
  };

  double b = 0.0, residual = 0.0;
  bool converged = false;
  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    std::size_t i = n, j = n;
    double m_up = -std::numeric_limits<double>::infinity();
    double m_low = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < n; ++t) {
      const double v = -y[t] * grad[t];
      if (in_up(t) && v > m_up) {
        m_up = v;
        i = t;
      }
      if (in_low(t) && v < m_low) {
        m_low = v;
        j = t;
      }
    }
    detail::ensure(i < n && j < n, "svm_train: working-set selection failed");
    residual = m_up - m_low;
    if (residual < tol) {
      b = 0.5 * (m_up + m_low);
      converged = true;
      break;
    }

    // Exact two-variable solve. When the step hits the box, the binding
    // variable is snapped exactly onto its bound and the partner recomputed
    // from the conserved quantity — a rounded clamp can strand an alpha at
    // 1e-17, which keeps its point selectable while every step clips to a
    // bitwise no-op, and the loop spins forever.
    const double ai_old = alpha[i], aj_old = alpha[j];
    double eta = 2.0 * k[i][j] - k[i][i] - k[j][j];
    if (eta > -1e-12) eta = -1e-12;  // duplicated points: damped step
    // E_i - E_j in bias-free form is y_i grad_i - y_j grad_j.
    double ai, aj = aj_old - y[j] * (y[i] * grad[i] - y[j] * grad[j]) / eta;
    if (y[i] != y[j]) {
      const double diff = aj_old - ai_old;  // conserved
      if (aj < std::max(0.0, diff)) {
        if (diff >= 0.0) { ai = 0.0; aj = diff; }
        else             { aj = 0.0; ai = -diff; }
      } else if (aj > std::min(c, c + diff)) {
        if (diff >= 0.0) { aj = c; ai = c - diff; }
        else             { ai = c; aj = c + diff; }
      } else {
        ai = ai_old + (aj - aj_old);
      }
    } else {
      const double sum = ai_old + aj_old;  // conserved
      if (aj < std::max(0.0, sum - c)) {
        if (sum <= c) { aj = 0.0; ai = sum; }
        else          { ai = c; aj = sum - c; }
      } else if (aj > std::min(c, sum)) {
        if (sum <= c) { ai = 0.0; aj = sum; }
        else          { aj = c; ai = sum - c; }
      } else {
        ai = ai_old - (aj - aj_old);
      }
    }
    const double di = ai - ai_old, dj = aj - aj_old;
    alpha[i] = ai;
    alpha[j] = aj;
    for (std::size_t t = 0; t < n; ++t)
      grad[t] += y[t] * (y[i] * k[i][t] * di + y[j] * k[j][t] * dj);
  }
  detail::ensure(converged, "svm_train: SMO did not converge, KKT residual " +
                                std::to_string(residual));
  model.kkt_residual = residual;

  double obj = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    obj += alpha[i];
    if (alpha[i] == 0.0) continue;
    for (std::size_t j = 0; j < n; ++j)
      obj -= 0.5 * alpha[i] * alpha[j] * y[i] * y[j] * k[i][j];
  }
  model.objective = obj;
  model.bias = b;
  for (std::size_t i = 0; i < n; ++i)
    if (alpha[i] > 0.0) {
      model.support_vectors.push_back(x[i]);
      model.dual_coef.push_back(alpha[i] * y[i]);
    }
  detail::ensure(model.trained(), "svm_train: no support vectors");
  return model;
}

}  // namespace neurotrack::classify
