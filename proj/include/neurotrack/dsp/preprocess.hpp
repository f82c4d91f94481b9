#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <string>

#include "neurotrack/core/error.hpp"
#include "neurotrack/dsp/fir.hpp"
#include "neurotrack/dsp/resample.hpp"
#include "neurotrack/signal/signal.hpp"

namespace neurotrack::dsp {

// Subtract the per-sample mean over channels from every channel.
inline MultichannelSignal common_average_reference(const MultichannelSignal& eeg) {
  detail::require(eeg.channels() >= 2, "common_average_reference: need >= 2 channels");
  MultichannelSignal out = eeg;
  const std::size_t n = eeg.samples();
  const double inv = 1.0 / static_cast<double>(eeg.channels());
  for (std::size_t t = 0; t < n; ++t) {
    double mean = 0.0;
    for (std::size_t c = 0; c < eeg.channels(); ++c) mean += eeg.at(c, t);
    mean *= inv;
    for (std::size_t c = 0; c < eeg.channels(); ++c) out.at(c, t) -= mean;
  }
  return out;
}

// Per-channel z-scoring with the population convention (divisor N).
inline MultichannelSignal zscore(const MultichannelSignal& signal) {
  detail::require(signal.samples() > 0, "zscore: empty signal");
  MultichannelSignal out = signal;
  const double n = static_cast<double>(signal.samples());
  for (std::size_t c = 0; c < signal.channels(); ++c) {
    const auto x = signal.channel(c);
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    var /= n;
    const double floor = 1e-12 * std::max(1.0, std::abs(mean));
    if (std::sqrt(var) <= floor) {
      throw InvalidArgument("zscore: constant channel " + std::to_string(c));
    }
    const double inv_std = 1.0 / std::sqrt(var);
    auto o = out.channel(c);
    for (std::size_t t = 0; t < x.size(); ++t) o[t] = (x[t] - mean) * inv_std;
  }
  return out;
}

// Pluggable artifact-removal stage. Real recordings would slot an ICA-based
// cleaner here; the default is the identity.
using ArtifactRemovalHook = std::function<MultichannelSignal(const MultichannelSignal&)>;

inline MultichannelSignal identity_artifact_removal(const MultichannelSignal& eeg) {
  return eeg;
}

// The EEG band filter order is specified at 512 Hz; scale it with the
// sampling rate so the transition resolution in Hz is preserved.
inline std::size_t scaled_filter_order(std::size_t order_at_512, double fs) {
  auto order = static_cast<std::size_t>(std::llround(
      static_cast<double>(order_at_512) * fs / 512.0));
  if (order % 2 != 0) ++order;
  return std::max<std::size_t>(order, 4);
}

// Full EEG preprocessing chain for one band:
//   artifact hook -> CAR -> band filter -> z-score -> resample to 64 Hz.
inline MultichannelSignal preprocess_eeg_band(
    const MultichannelSignal& eeg, const BandDef& band,
    std::size_t order_at_512 = 2000,
    const ArtifactRemovalHook& artifact_hook = identity_artifact_removal) {
  MultichannelSignal work = artifact_hook(eeg);
  work = common_average_reference(work);
  work = band_filter(work, band, scaled_filter_order(order_at_512, work.fs()));
  work = zscore(work);
  if (work.fs() != 64.0) work = resample(work, 64.0);
  return work;
}

}  // namespace neurotrack::dsp
