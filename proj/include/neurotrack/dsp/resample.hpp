#pragma once

#include <cmath>
#include <cstddef>

#include "neurotrack/core/error.hpp"
#include "neurotrack/dsp/fir.hpp"
#include "neurotrack/signal/signal.hpp"

namespace neurotrack::dsp {

// Anti-alias lowpass for integer decimation: cutoff 0.45 * to_fs, order
// 16 * (fs / to_fs), designed with the same least-squares method as the
// band filters. The order keeps passband ripple below 1% at low
// frequencies.
inline FirFilter design_antialias(double fs, double to_fs) {
  const double ratio = fs / to_fs;
  std::size_t order = static_cast<std::size_t>(std::llround(16.0 * ratio));
  if (order % 2 != 0) ++order;
  BandDef lowpass{"antialias", 0.0, 0.45 * to_fs};
  return design_fir(lowpass, fs, order);
}

// Integer-factor decimation with anti-alias filtering. to_fs must divide fs.
inline MultichannelSignal resample(const MultichannelSignal& signal, double to_fs) {
  detail::require(to_fs > 0.0, "resample: to_fs must be > 0");
  detail::require(to_fs <= signal.fs(), "resample: upsampling not supported");
  const double ratio_f = signal.fs() / to_fs;
  const auto ratio = static_cast<std::size_t>(std::llround(ratio_f));
  detail::require(std::abs(ratio_f - static_cast<double>(ratio)) < 1e-9,
                  "resample: decimation factor must be an integer");
  if (ratio == 1) return signal;

  const MultichannelSignal filtered =
      apply_fir_compensated(signal, design_antialias(signal.fs(), to_fs));
  const std::size_t out_samples = (signal.samples() + ratio - 1) / ratio;
  MultichannelSignal out(signal.channels(), out_samples, to_fs);
  out.channel_labels() = signal.channel_labels();
  for (std::size_t ch = 0; ch < signal.channels(); ++ch) {
    const auto src = filtered.channel(ch);
    auto dst = out.channel(ch);
    for (std::size_t t = 0; t < out_samples; ++t) dst[t] = src[t * ratio];
  }
  return out;
}

}  // namespace neurotrack::dsp
