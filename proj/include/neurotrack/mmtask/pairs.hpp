#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "neurotrack/core/error.hpp"
#include "neurotrack/signal/signal.hpp"
#include "neurotrack/speechfeat/features.hpp"

namespace neurotrack::mmtask {

// One labeled match-mismatch example. Windows are stored as [start, start+len)
// sample ranges into the source EEG/feature streams; tensor extraction happens
// at batch time so pair lists stay cheap to copy and audit.
struct SegmentPair {
  std::string subject_id;
  std::string feature_name;
  std::size_t eeg_start = 0;       // matched window start (samples @64 Hz)
  std::size_t mismatch_start = 0;  // mismatched feature window start
  std::size_t window = 0;          // samples per window
  bool first_is_match = true;      // label: does candidate 1 match the EEG?
  double start_s = 0.0;            // matched window start in source time
};

inline constexpr double kPairFs = 64.0;

struct PairConfig {
  double window_s = 5.0;
  double hop_s = 5.0;
  double offset_s = 1.0;
};

// Enumerate match-mismatch pairs over an aligned EEG/feature stream pair.
// Matched windows start at t = 0, hop, 2*hop, ...; a pair is kept only when
// the mismatched window (starting offset_s after the matched window's end)
// still fits. Each base pair is emitted twice with candidate order swapped,
// so labels balance exactly 50/50.
inline std::vector<SegmentPair> make_pairs(const MultichannelSignal& eeg,
                                           const speechfeat::FeatureStream& feature,
                                           const PairConfig& cfg,
                                           const std::string& subject_id = "") {
  detail::require(eeg.fs() == kPairFs && feature.signal.fs() == kPairFs,
                  "make_pairs: streams must be sampled at 64 Hz");
  detail::require(eeg.samples() == feature.signal.samples(),
                  "make_pairs: EEG and feature streams are not aligned");
  detail::require(cfg.window_s > 0.0 && cfg.hop_s > 0.0 && cfg.offset_s > 0.0,
                  "make_pairs: window/hop/offset must be positive");
  const std::size_t n = eeg.samples();
  const auto window = static_cast<std::size_t>(std::llround(cfg.window_s * kPairFs));
  const auto hop = static_cast<std::size_t>(std::llround(cfg.hop_s * kPairFs));
  const auto offset = static_cast<std::size_t>(std::llround(cfg.offset_s * kPairFs));
  detail::require(window <= n, "make_pairs: window longer than recording");

  std::vector<SegmentPair> out;
  for (std::size_t t = 0; t + 2 * window + offset <= n; t += hop) {
    SegmentPair p;
    p.subject_id = subject_id;
    p.feature_name = feature.name;
    p.eeg_start = t;
    p.mismatch_start = t + window + offset;
    p.window = window;
    p.start_s = static_cast<double>(t) / kPairFs;
    p.first_is_match = true;
    out.push_back(p);
    p.first_is_match = false;  // same windows, candidates presented swapped
    out.push_back(p);
  }
  return out;
}

// Dense views used at batch time.
struct PairTensors {
  std::vector<double> eeg;        // channels x window, row-major
  std::vector<double> candidate1; // window
  std::vector<double> candidate2; // window
  std::size_t channels = 0;
  std::size_t window = 0;
  double label = 0.0;  // 1.0 when candidate1 is the match
};

inline PairTensors extract_pair(const MultichannelSignal& eeg,
                                const speechfeat::FeatureStream& feature,
                                const SegmentPair& pair) {
  detail::require(pair.mismatch_start + pair.window <= eeg.samples(),
                  "extract_pair: window exceeds recording");
  detail::require(pair.feature_name == feature.name, "extract_pair: feature mismatch");
  PairTensors out;
  out.channels = eeg.channels();
  out.window = pair.window;
  out.label = pair.first_is_match ? 1.0 : 0.0;
  out.eeg.resize(out.channels * pair.window);
  for (std::size_t c = 0; c < out.channels; ++c) {
    const auto src = eeg.channel(c);
    std::copy(src.begin() + static_cast<std::ptrdiff_t>(pair.eeg_start),
              src.begin() + static_cast<std::ptrdiff_t>(pair.eeg_start + pair.window),
              out.eeg.begin() + static_cast<std::ptrdiff_t>(c * pair.window));
  }
  const auto feat = feature.signal.channel(0);
  std::vector<double> matched(feat.begin() + static_cast<std::ptrdiff_t>(pair.eeg_start),
                              feat.begin() + static_cast<std::ptrdiff_t>(pair.eeg_start + pair.window));
  std::vector<double> mismatched(
      feat.begin() + static_cast<std::ptrdiff_t>(pair.mismatch_start),
      feat.begin() + static_cast<std::ptrdiff_t>(pair.mismatch_start + pair.window));
  if (pair.first_is_match) {
    out.candidate1 = std::move(matched);
    out.candidate2 = std::move(mismatched);
  } else {
    out.candidate1 = std::move(mismatched);
    out.candidate2 = std::move(matched);
  }
  return out;
}

struct SplitSpec {
  double train = 0.80;
  double val = 0.10;
  double test = 0.10;
};

struct SplitPairs {
  std::vector<SegmentPair> train, val, test;
};

// Temporal split: first 80% of matched-window start times train, next 10%
// validation, last 10% test. Swap-duplicates share a start time and therefore
// always land in the same partition.
inline SplitPairs split_pairs(const std::vector<SegmentPair>& pairs, const SplitSpec& spec = {}) {
  detail::require(std::abs(spec.train + spec.val + spec.test - 1.0) < 1e-9,
                  "split_pairs: fractions must sum to 1");
  detail::require(pairs.size() % 2 == 0, "split_pairs: expected swap-duplicated pairs");
  const std::size_t base = pairs.size() / 2;
  detail::require(base >= 10, "split_pairs: fewer than 10 base pairs");

  // Pairs arrive ordered by start time with duplicates adjacent.
  const auto n_train = static_cast<std::size_t>(std::floor(spec.train * static_cast<double>(base)));
  const auto n_val = static_cast<std::size_t>(std::floor(spec.val * static_cast<double>(base)));

  SplitPairs out;
  for (std::size_t b = 0; b < base; ++b) {
    auto& dest = (b < n_train) ? out.train : (b < n_train + n_val) ? out.val : out.test;
    dest.push_back(pairs[2 * b]);
    dest.push_back(pairs[2 * b + 1]);
  }
  return out;
}

}  // namespace neurotrack::mmtask
