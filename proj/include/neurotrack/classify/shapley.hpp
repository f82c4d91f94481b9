#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "neurotrack/classify/svm.hpp"
#include "neurotrack/core/error.hpp"

namespace neurotrack::classify {

// Exact Shapley values for a coalition value function over d features,
// v : bitmask -> real. Evaluates all 2^d coalitions once, then
// phi_i = sum over S not containing i of |S|!(d-|S|-1)!/d! (v(S+i) - v(S)).
inline std::vector<double> shapley_exact(std::size_t d,
                                         const std::function<double(std::uint32_t)>& value) {
  neurotrack::detail::require(d >= 1 && d <= 20, "shapley_exact: need 1-20 features");
  const std::uint32_t full = (1u << d) - 1u;

  std::vector<double> v(static_cast<std::size_t>(full) + 1);
  for (std::uint32_t s = 0; s <= full; ++s) v[s] = value(s);

  // weight[k] = k! (d-k-1)! / d!
  std::vector<double> weight(d);
  for (std::size_t k = 0; k < d; ++k) {
    double w = 1.0;
    for (std::size_t j = 1; j <= k; ++j) w *= static_cast<double>(j);
    for (std::size_t j = 1; j + k < d; ++j) w *= static_cast<double>(j);
    for (std::size_t j = 1; j <= d; ++j) w /= static_cast<double>(j);
    weight[k] = w;
  }

  std::vector<double> phi(d, 0.0);
  for (std::uint32_t s = 0; s <= full; ++s) {
    const auto size = static_cast<std::size_t>(std::popcount(s));
    for (std::size_t i = 0; i < d; ++i) {
      const std::uint32_t bit = 1u << i;
      if (s & bit) continue;
      phi[i] += weight[size] * (v[s | bit] - v[s]);
    }
  }
  return phi;
}

// Interventional marginal expectation for an SVM decision score: features in
// the coalition come from x, the rest from each background profile in turn,
// averaged. Efficiency: sum phi = v(full) - v(empty) = score(x) - mean
// background score (up to floating-point rounding).
inline std::vector<double> shapley_values(const SvmModel& model, const std::vector<double>& x,
                                          const std::vector<std::vector<double>>& background) {
  neurotrack::detail::require(model.trained(), "shapley_values: untrained model");
  neurotrack::detail::require(background.size() >= 10,
                              "shapley_values: need >= 10 background profiles");
  const std::size_t d = x.size();
  for (const auto& b : background)
    neurotrack::detail::require(b.size() == d, "shapley_values: background dimension mismatch");

  const auto value = [&](std::uint32_t mask) {
    double mean = 0.0;
    std::vector<double> z(d);
    for (const auto& b : background) {
      for (std::size_t j = 0; j < d; ++j) z[j] = (mask >> j) & 1u ? x[j] : b[j];
      mean += model.decision_score(z);
    }
    return mean / static_cast<double>(background.size());
  };
  return shapley_exact(d, value);
}

}  // namespace neurotrack::classify
