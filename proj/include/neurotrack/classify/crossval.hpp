#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "neurotrack/classify/metrics.hpp"
#include "neurotrack/classify/profiles.hpp"
#include "neurotrack/classify/svm.hpp"
#include "neurotrack/core/parallel.hpp"
#include "neurotrack/core/rng.hpp"

namespace neurotrack::classify {

struct CvConfig {
  std::vector<double> c_grid = {0.01, 0.046415888336127774, 0.21544346900318834, 1.0,
                                4.6415888336127775, 21.544346900318832, 100.0};  // 10^(-2..2)
  std::vector<double> gamma_scale = {0.1, 1.0, 10.0};  // times 1/n_features
  std::size_t inner_folds = 5;
  bool prune = false;  // greedy backward feature elimination on inner accuracy
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
};

struct FoldOutcome {
  std::string test_subject;
  int label = 0;
  int prediction = 0;
  double score = 0.0;
  double c = 0.0;
  double gamma = 0.0;
  std::vector<std::size_t> dropped_features;  // indices into profile_feature_order()
  std::uint64_t train_hash = 0;               // leakage audit: hash of training ids
};

struct NestedCvResult {
  std::vector<FoldOutcome> folds;  // one per subject, LOSO order
  ClassMetrics test_metrics;
  RocResult roc;
};

namespace detail {

inline std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 1469598103934665603ull) {
  for (const unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

// Stratified fold assignment: within each class, subjects are shuffled
// deterministically and dealt round-robin, so classes spread as evenly as
// possible across folds.
inline std::vector<std::size_t> stratified_folds(const std::vector<int>& y, std::size_t k,
                                                 Rng& rng) {
  std::vector<std::size_t> fold(y.size());
  for (const int cls : {-1, 1}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < y.size(); ++i)
      if (y[i] == cls) members.push_back(i);
    rng.shuffle(members);
    for (std::size_t j = 0; j < members.size(); ++j) fold[members[j]] = j % k;
  }
  return fold;
}

// Mean accuracy of (C, gamma) over the inner folds, using only the feature
// columns in `keep`.
inline double inner_cv_accuracy(const std::vector<std::vector<double>>& x,
                                const std::vector<int>& y,
                                const std::vector<std::size_t>& fold, std::size_t k, double c,
                                double gamma, const std::vector<std::size_t>& keep) {
  double correct = 0, total = 0;
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<std::vector<double>> xtr, xte;
    std::vector<int> ytr, yte;
    for (std::size_t i = 0; i < x.size(); ++i) {
      std::vector<double> row;
      for (const auto j : keep) row.push_back(x[i][j]);
      if (fold[i] == f) {
        xte.push_back(std::move(row));
        yte.push_back(y[i]);
      } else {
        xtr.push_back(std::move(row));
        ytr.push_back(y[i]);
      }
    }
    if (xte.empty()) continue;  // class counts below k can leave a fold empty
    const auto model = svm_train(xtr, ytr, c, gamma);
    for (std::size_t i = 0; i < xte.size(); ++i) {
      correct += model.predict(xte[i]) == yte[i] ? 1.0 : 0.0;
      total += 1.0;
    }
  }
  ensure(total > 0.0, "inner_cv_accuracy: no test examples in any fold");
  return correct / total;
}

}  // namespace detail

// Leave-one-subject-out evaluation with a stratified inner loop selecting C
// and gamma (and optionally a pruned feature subset) by mean inner accuracy.
// Ties prefer smaller C, then smaller gamma — fully deterministic.
inline NestedCvResult nested_cv(const std::vector<TrackingProfile>& profiles,
                                const CvConfig& cfg = {}) {
  detail::require(profiles.size() >= 10, "nested_cv: need >= 10 subjects");
  detail::require(cfg.inner_folds >= 2, "nested_cv: need >= 2 inner folds");
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  to_matrix(profiles, x, y);
  const std::size_t n = profiles.size();
  const std::size_t dim = x.front().size();
  {
    std::set<std::string> ids;
    for (const auto& p : profiles) ids.insert(p.subject_id);
    detail::require(ids.size() == n, "nested_cv: duplicate subject ids");
  }

  NestedCvResult res;
  res.folds.resize(n);
  parallel_for(n, cfg.jobs, [&](std::size_t outer) {
    std::vector<std::vector<double>> xin;
    std::vector<int> yin;
    std::vector<std::string> train_ids;
    for (std::size_t i = 0; i < n; ++i) {
      if (i == outer) continue;
      xin.push_back(x[i]);
      yin.push_back(y[i]);
      train_ids.push_back(profiles[i].subject_id);
    }
    for (const int cls : {-1, 1}) {
      const auto count = std::count(yin.begin(), yin.end(), cls);
      detail::require(count >= 3, "nested_cv: a class has fewer than 3 inner subjects");
    }

    Rng rng(derive_seed(cfg.seed, 0xcf00 + outer));
    const auto fold = detail::stratified_folds(yin, cfg.inner_folds, rng);

    std::vector<std::size_t> keep(dim);
    std::iota(keep.begin(), keep.end(), 0);

    double best_acc = -1.0, best_c = 0.0, best_gamma = 0.0;
    for (const double c : cfg.c_grid)
      for (const double scale : cfg.gamma_scale) {
        const double gamma = scale / static_cast<double>(dim);
        const double acc =
            detail::inner_cv_accuracy(xin, yin, fold, cfg.inner_folds, c, gamma, keep);
        if (acc > best_acc) {
          best_acc = acc;
          best_c = c;
          best_gamma = gamma;
        }
      }

    std::vector<std::size_t> dropped;
    if (cfg.prune) {
      bool improved = true;
      while (improved && keep.size() > 1) {
        improved = false;
        std::size_t best_drop = keep.size();
        double best_drop_acc = best_acc;
        for (std::size_t d = 0; d < keep.size(); ++d) {
          auto trial = keep;
          trial.erase(trial.begin() + static_cast<std::ptrdiff_t>(d));
          const double acc = detail::inner_cv_accuracy(xin, yin, fold, cfg.inner_folds, best_c,
                                                       best_gamma, trial);
          if (acc > best_drop_acc) {
            best_drop_acc = acc;
            best_drop = d;
          }
        }
        if (best_drop < keep.size()) {
          dropped.push_back(keep[best_drop]);
          keep.erase(keep.begin() + static_cast<std::ptrdiff_t>(best_drop));
          best_acc = best_drop_acc;
          improved = true;
        }
      }
    }

    std::vector<std::vector<double>> xtr;
    for (const auto& row : xin) {
      std::vector<double> r;
      for (const auto j : keep) r.push_back(row[j]);
      xtr.push_back(std::move(r));
    }
    const auto model = svm_train(xtr, yin, best_c, best_gamma);

    std::vector<double> xte;
    for (const auto j : keep) xte.push_back(x[outer][j]);

    FoldOutcome out;
    out.test_subject = profiles[outer].subject_id;
    out.label = y[outer];
    out.score = model.decision_score(xte);
    out.prediction = out.score >= 0.0 ? 1 : -1;
    out.c = best_c;
    out.gamma = best_gamma;
    out.dropped_features = dropped;
    std::sort(train_ids.begin(), train_ids.end());
    std::uint64_t h = 1469598103934665603ull;
    for (const auto& id : train_ids) {
      detail::ensure(id != profiles[outer].subject_id,
                     "nested_cv: test subject leaked into training fold");
      h = detail::fnv1a(id + ";", h);
    }
    out.train_hash = h;
    res.folds[outer] = std::move(out);
  });

  std::vector<int> preds, labels;
  std::vector<double> scores;
  for (const auto& f : res.folds) {
    preds.push_back(f.prediction);
    labels.push_back(f.label);
    scores.push_back(f.score);
  }
  res.test_metrics = metrics(preds, labels);
  res.roc = roc_auc(scores, labels);
  return res;
}

}  // namespace neurotrack::classify
