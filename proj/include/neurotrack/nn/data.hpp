#pragma once

#include <cstddef>
#include <vector>

#include "neurotrack/core/error.hpp"
#include "neurotrack/mmtask/pairs.hpp"
#include "neurotrack/nn/model.hpp"
#include "neurotrack/speechfeat/features.hpp"

namespace neurotrack::nn {

// Lazy dataset: window tensors are cut from the source streams at batch time.
// feature_b is null for single-feature models; pairs are indexed against the
// feature_a stream (windows apply identically to both features).
class PairDataset {
 public:
  struct Source {
    const MultichannelSignal* eeg = nullptr;
    const speechfeat::FeatureStream* feature_a = nullptr;
    const speechfeat::FeatureStream* feature_b = nullptr;  // optional
  };

  void add_source(Source src, const std::vector<mmtask::SegmentPair>& pairs) {
    detail::require(src.eeg && src.feature_a, "PairDataset: missing streams");
    const auto source_idx = sources_.size();
    sources_.push_back(src);
    for (const auto& p : pairs) items_.push_back({source_idx, p});
  }

  std::size_t size() const { return items_.size(); }
  bool dual() const { return !sources_.empty() && sources_.front().feature_b != nullptr; }

  Example example(std::size_t idx) const {
    detail::require(idx < items_.size(), "PairDataset: index out of range");
    const auto& item = items_[idx];
    const auto& src = sources_[item.source];
    auto a = mmtask::extract_pair(*src.eeg, *src.feature_a, item.pair);
    Example ex;
    ex.channels = a.channels;
    ex.window = a.window;
    ex.label = item.label_override < 0 ? a.label : static_cast<double>(item.label_override);
    ex.eeg = std::move(a.eeg);
    ex.c1_a = std::move(a.candidate1);
    ex.c2_a = std::move(a.candidate2);
    if (src.feature_b) {
      auto pair_b = item.pair;
      pair_b.feature_name = src.feature_b->name;
      auto b = mmtask::extract_pair(*src.eeg, *src.feature_b, pair_b);
      ex.c1_b = std::move(b.candidate1);
      ex.c2_b = std::move(b.candidate2);
    }
    return ex;
  }

  const mmtask::SegmentPair& pair(std::size_t idx) const { return items_[idx].pair; }

  // Replace labels with coin flips while keeping the presented inputs fixed
  // (chance-level control: inputs no longer predict the label).
  void shuffle_labels(Rng& rng) {
    for (auto& item : items_) item.label_override = static_cast<int>(rng.below(2));
  }

 private:
  struct Item {
    std::size_t source;
    mmtask::SegmentPair pair;
    int label_override = -1;
  };
  std::vector<Source> sources_;
  std::vector<Item> items_;
};

}  // namespace neurotrack::nn
