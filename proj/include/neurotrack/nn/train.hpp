#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "neurotrack/core/error.hpp"
#include "neurotrack/core/rng.hpp"
#include "neurotrack/nn/adam.hpp"
#include "neurotrack/nn/data.hpp"
#include "neurotrack/nn/model.hpp"

namespace neurotrack::nn {

struct TrainConfig {
  AdamConfig adam;
  std::size_t batch_size = 64;
  std::size_t max_epochs = 100;
  std::size_t patience = 5;  // early stopping on validation loss
  std::uint64_t seed = 0;    // shuffling order
};

struct TrainResult {
  std::vector<double> train_loss;  // per epoch
  std::vector<double> val_loss;
  std::vector<double> val_accuracy;
  std::size_t best_epoch = 0;  // 0-based index into the curves
  std::size_t epochs_run = 0;
};

// Accuracy with the deterministic tie rule: p = 0.5 predicts candidate 1, so
// a constant-0.5 model scores exactly 0.5 on swap-balanced pairs.
inline bool prediction_correct(double p, double label) {
  const bool predict_first = p >= 0.5;
  return predict_first == (label >= 0.5);
}

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
  std::vector<double> probabilities;  // per example, order of the dataset
};

inline EvalResult evaluate(MatchMismatchModel& model, const PairDataset& data) {
  detail::require(data.size() > 0, "evaluate: empty pair list");
  EvalResult out;
  out.probabilities.reserve(data.size());
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto ex = data.example(i);
    const double p = model.forward(ex);
    detail::ensure(std::isfinite(p), "evaluate: non-finite probability at example " +
                                         std::to_string(i));
    out.loss += bce_loss(p, ex.label);
    if (prediction_correct(p, ex.label)) ++correct;
    out.probabilities.push_back(p);
  }
  out.loss /= static_cast<double>(data.size());
  out.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  return out;
}

inline double evaluate_subject(MatchMismatchModel& model, const PairDataset& pairs) {
  return evaluate(model, pairs).accuracy;
}

// Minimize mean BCE with Adam; early stopping on validation loss restores the
// best-validation checkpoint. Deterministic given config.seed.
inline TrainResult train_model(MatchMismatchModel& model, const PairDataset& train,
                               const PairDataset& val, const TrainConfig& cfg) {
  detail::require(train.size() > 0 && val.size() > 0, "train_model: empty partition");
  Adam adam(model, cfg.adam);
  Rng shuffle_rng(cfg.seed);

  TrainResult result;
  std::vector<double> best_params = model.get_params();
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t wait = 0;

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t n = std::min(cfg.batch_size, order.size() - start);
      model.zero_grad();
      for (std::size_t j = 0; j < n; ++j) {
        const auto ex = train.example(order[start + j]);
        const double p = model.forward(ex);
        const double loss = bce_loss(p, ex.label);
        detail::ensure(std::isfinite(loss),
                       "train_model: non-finite loss at example " +
                           std::to_string(order[start + j]));
        epoch_loss += loss;
        model.backward((p - ex.label) / static_cast<double>(n));
      }
      adam.step(model);
    }
    epoch_loss /= static_cast<double>(train.size());
    result.train_loss.push_back(epoch_loss);

    const auto v = evaluate(model, val);
    detail::ensure(std::isfinite(v.loss), "train_model: validation loss diverged (NaN)");
    result.val_loss.push_back(v.loss);
    result.val_accuracy.push_back(v.accuracy);
    result.epochs_run = epoch + 1;

    if (v.loss < best_val - 1e-9) {
      best_val = v.loss;
      best_params = model.get_params();
      result.best_epoch = epoch;
      wait = 0;
    } else if (++wait >= cfg.patience) {
      break;
    }
  }

  model.set_params(best_params);
  return result;
}

}  // namespace neurotrack::nn
