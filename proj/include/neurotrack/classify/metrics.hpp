#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "neurotrack/core/error.hpp"

namespace neurotrack::classify {

namespace detail {
using neurotrack::detail::require;
}

struct ClassMetrics {
  double accuracy = 0.0;
  double f1 = 0.0;          // on the positive class
  double sensitivity = 0.0;  // recall of positives
  double specificity = 0.0;  // recall of negatives
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
};

// Standard confusion-matrix metrics; labels and predictions are +1/-1 with
// +1 the positive (patient) class.
inline ClassMetrics metrics(const std::vector<int>& preds, const std::vector<int>& labels) {
  detail::require(!preds.empty(), "metrics: empty input");
  detail::require(preds.size() == labels.size(), "metrics: length mismatch");
  ClassMetrics m;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    detail::require(std::abs(preds[i]) == 1 && std::abs(labels[i]) == 1,
                    "metrics: labels must be +1/-1");
    if (labels[i] > 0)
      (preds[i] > 0 ? m.tp : m.fn) += 1;
    else
      (preds[i] > 0 ? m.fp : m.tn) += 1;
  }
  const auto d = [](std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  m.accuracy = d(m.tp + m.tn, preds.size());
  m.sensitivity = d(m.tp, m.tp + m.fn);
  m.specificity = d(m.tn, m.tn + m.fp);
  const double precision = d(m.tp, m.tp + m.fp);
  m.f1 = (precision + m.sensitivity) == 0.0
             ? 0.0
             : 2.0 * precision * m.sensitivity / (precision + m.sensitivity);
  return m;
}

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;
};

struct RocResult {
  std::vector<RocPoint> points;  // from (0,0) to (1,1)
  double auc = 0.0;
};

// ROC over all score thresholds; tied scores move as one block, so the AUC
// (trapezoidal) equals the probability a random positive outscores a random
// negative with ties counted 1/2.
inline RocResult roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  detail::require(!scores.empty() && scores.size() == labels.size(),
                  "roc_auc: empty input or length mismatch");
  std::size_t n_pos = 0, n_neg = 0;
  for (int y : labels) {
    detail::require(std::abs(y) == 1, "roc_auc: labels must be +1/-1");
    (y > 0 ? n_pos : n_neg) += 1;
  }
  detail::require(n_pos > 0 && n_neg > 0, "roc_auc: both classes required");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return scores[i] > scores[j];
  });

  RocResult res;
  res.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  double tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    double block_tp = 0, block_fp = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] > 0 ? block_tp : block_fp) += 1;
      ++j;
    }
    const double tpr0 = tp / n_pos, fpr0 = fp / n_neg;
    tp += block_tp;
    fp += block_fp;
    const double tpr1 = tp / n_pos, fpr1 = fp / n_neg;
    res.auc += (fpr1 - fpr0) * 0.5 * (tpr0 + tpr1);
    res.points.push_back({fpr1, tpr1, scores[order[i]]});
    i = j;
  }
  return res;
}

}  // namespace neurotrack::classify
