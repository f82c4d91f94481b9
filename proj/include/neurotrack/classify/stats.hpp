#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "neurotrack/core/error.hpp"

namespace neurotrack::classify {

namespace detail {
using neurotrack::detail::ensure;
using neurotrack::detail::require;
}  // namespace detail

// Midranks of the combined sample; ties share the average rank.
inline std::vector<double> midranks(const std::vector<double>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return values[i] < values[j];
  });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double shared = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based midrank
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
    i = j + 1;
  }
  return ranks;
}

struct RankSumResult {
  double u = 0.0;  // Mann-Whitney U of group a (reported as W)
  double p = 1.0;  // two-sided
  bool exact = false;
};

namespace detail {

inline double normal_sf(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

// Exact permutation distribution of U over all C(n, n_a) group assignments,
// computed on the observed midranks so ties are handled exactly.
inline double exact_two_sided_p(const std::vector<double>& ranks, std::size_t n_a, double u_obs) {
  const std::size_t n = ranks.size();
  std::vector<bool> pick(n, false);
  std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(n_a), true);
  std::sort(pick.begin(), pick.end());  // lexicographically first combination
  const double offset = 0.5 * static_cast<double>(n_a * (n_a + 1));
  double le = 0, ge = 0, total = 0;
  const double eps = 1e-9;
  do {
    double rank_sum = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (pick[i]) rank_sum += ranks[i];
    const double u = rank_sum - offset;
    if (u <= u_obs + eps) le += 1;
    if (u >= u_obs - eps) ge += 1;
    total += 1;
  } while (std::next_permutation(pick.begin(), pick.end()));
  return std::min(1.0, 2.0 * std::min(le, ge) / total);
}

}  // namespace detail

// Two-sided Wilcoxon rank-sum / Mann-Whitney test. W is the U statistic of
// group a (rank sum of a minus its minimum). Exact enumeration for
// n_a + n_b <= 12, otherwise normal approximation with tie and continuity
// corrections.
inline RankSumResult wilcoxon_rank_sum(const std::vector<double>& a,
                                       const std::vector<double>& b) {
  detail::require(a.size() >= 2 && b.size() >= 2, "wilcoxon_rank_sum: each group needs >= 2");
  const std::size_t n_a = a.size(), n_b = b.size(), n = n_a + n_b;
  std::vector<double> pooled = a;
  pooled.insert(pooled.end(), b.begin(), b.end());
  for (double v : pooled)
    detail::require(std::isfinite(v), "wilcoxon_rank_sum: non-finite value");
  const auto ranks = midranks(pooled);

  double rank_sum_a = 0;
  for (std::size_t i = 0; i < n_a; ++i) rank_sum_a += ranks[i];
  RankSumResult res;
  res.u = rank_sum_a - 0.5 * static_cast<double>(n_a * (n_a + 1));

  if (n <= 12) {
    res.exact = true;
    res.p = detail::exact_two_sided_p(ranks, n_a, res.u);
    return res;
  }

  const double mu = 0.5 * static_cast<double>(n_a) * static_cast<double>(n_b);
  // Tie correction: group equal values in the pooled sample.
  std::vector<double> sorted = pooled;
  std::sort(sorted.begin(), sorted.end());
  double tie_term = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && sorted[j + 1] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i + 1);
    tie_term += t * t * t - t;
    i = j + 1;
  }
  const double nn = static_cast<double>(n);
  const double var = (static_cast<double>(n_a) * static_cast<double>(n_b) / 12.0) *
                     ((nn + 1.0) - tie_term / (nn * (nn - 1.0)));
  detail::require(var > 0.0, "wilcoxon_rank_sum: zero variance (all values tied)");
  const double cc = res.u > mu ? -0.5 : (res.u < mu ? 0.5 : 0.0);  // toward the mean
  const double z = (res.u - mu + cc) / std::sqrt(var);
  res.p = std::min(1.0, 2.0 * detail::normal_sf(std::abs(z)));
  return res;
}

// Benjamini-Hochberg step-up. adjusted[i] = min over j with rank >= rank(i)
// of m * p_(j) / j, capped at 1; reject iff adjusted <= q.
struct FdrResult {
  std::vector<double> adjusted;
  std::vector<bool> reject;
};

inline FdrResult fdr_bh(const std::vector<double>& pvals, double q) {
  detail::require(!pvals.empty(), "fdr_bh: empty p-value list");
  detail::require(q > 0.0 && q < 1.0, "fdr_bh: q must be in (0, 1)");
  const std::size_t m = pvals.size();
  for (double p : pvals)
    detail::require(p >= 0.0 && p <= 1.0, "fdr_bh: p-value outside [0, 1]");

  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return pvals[i] < pvals[j];
  });

  FdrResult res;
  res.adjusted.resize(m);
  res.reject.resize(m);
  double running = 1.0;
  for (std::size_t k = m; k-- > 0;) {
    const double scaled = pvals[order[k]] * static_cast<double>(m) / static_cast<double>(k + 1);
    running = std::min(running, scaled);
    res.adjusted[order[k]] = running;
  }
  for (std::size_t i = 0; i < m; ++i) res.reject[i] = res.adjusted[i] <= q;
  return res;
}

struct StatTestResult {
  std::string feature;
  double w = 0.0;
  double p_raw = 1.0;
  double p_adjusted = 1.0;
  bool reject = false;
};

// Per-feature two-group comparison with BH correction across features.
// `a` and `b` are per-feature value lists keyed identically.
inline std::vector<StatTestResult> feature_tests(
    const std::map<std::string, std::vector<double>>& a,
    const std::map<std::string, std::vector<double>>& b, double q) {
  detail::require(!a.empty() && a.size() == b.size(), "feature_tests: group key sets differ");
  std::vector<StatTestResult> out;
  std::vector<double> pvals;
  for (const auto& [name, va] : a) {
    const auto it = b.find(name);
    detail::require(it != b.end(), "feature_tests: feature missing in group b: " + name);
    const auto rs = wilcoxon_rank_sum(va, it->second);
    out.push_back({name, rs.u, rs.p, 1.0, false});
    pvals.push_back(rs.p);
  }
  const auto fdr = fdr_bh(pvals, q);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].p_adjusted = fdr.adjusted[i];
    out[i].reject = fdr.reject[i];
  }
  return out;
}

}  // namespace neurotrack::classify
