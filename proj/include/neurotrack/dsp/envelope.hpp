#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "neurotrack/core/error.hpp"
#include "neurotrack/dsp/fft.hpp"
#include "neurotrack/dsp/fir.hpp"
#include "neurotrack/dsp/resample.hpp"
#include "neurotrack/signal/signal.hpp"

namespace neurotrack::dsp {

enum class EnvelopeMethod {
  kAuditoryFilterbank,  // gammatone-style subband magnitudes, compressed and summed
  kAnalytic,            // magnitude of the FFT-based analytic signal
};

struct EnvelopeOptions {
  EnvelopeMethod method = EnvelopeMethod::kAuditoryFilterbank;
  std::size_t num_bands = 28;
  double fmin_hz = 50.0;
  double fmax_hz = 5000.0;
  double compression = 0.6;
  std::size_t band_filter_order = 2000;  // at 512 Hz, shared with the EEG filters
};

namespace detail {

inline double erb_number(double f_hz) {
  return 21.4 * std::log10(1.0 + 0.00437 * f_hz);
}

inline double erb_number_inverse(double erb) {
  return (std::pow(10.0, erb / 21.4) - 1.0) / 0.00437;
}

inline double erb_bandwidth(double f_hz) {
  return 24.7 * (1.0 + 0.00437 * f_hz);
}

// Gammatone-style band magnitude: four cascaded complex one-pole sections
// centered at fc; |output| approximates the subband Hilbert envelope.
inline void accumulate_band_envelope(const std::span<const double> x, double fc,
                                     double fs, double compression,
                                     std::vector<double>& env) {
  const double bw = 1.019 * erb_bandwidth(fc);
  const double lambda = std::exp(-2.0 * std::numbers::pi * bw / fs);
  const double beta = 2.0 * std::numbers::pi * fc / fs;
  const std::complex<double> pole = lambda * std::complex<double>(std::cos(beta), std::sin(beta));
  const double gain = 2.0 * std::pow(1.0 - lambda, 4.0);
  std::complex<double> s1{}, s2{}, s3{}, s4{};
  for (std::size_t n = 0; n < x.size(); ++n) {
    s1 = x[n] + pole * s1;
    s2 = s1 + pole * s2;
    s3 = s2 + pole * s3;
    s4 = s3 + pole * s4;
    env[n] += std::pow(gain * std::abs(s4), compression);
  }
}

inline std::vector<double> analytic_magnitude(const std::span<const double> x) {
  const std::size_t n = x.size();
  const std::size_t padded = next_pow2(n);
  std::vector<std::complex<double>> spec(padded, 0.0);
  for (std::size_t i = 0; i < n; ++i) spec[i] = x[i];
  fft_inplace(spec, false);
  for (std::size_t k = 1; k < padded / 2; ++k) spec[k] *= 2.0;
  for (std::size_t k = padded / 2 + 1; k < padded; ++k) spec[k] = 0.0;
  fft_inplace(spec, true);
  std::vector<double> env(n);
  for (std::size_t i = 0; i < n; ++i) env[i] = std::abs(spec[i]);
  return env;
}

}  // namespace detail

// Broadband amplitude envelope at the input rate; non-negative.
inline std::vector<double> broadband_envelope(const MultichannelSignal& audio,
                                              const EnvelopeOptions& options = {}) {
  detail::require(audio.channels() == 1, "broadband_envelope: audio must be mono");
  detail::require(audio.samples() > 0, "broadband_envelope: empty signal");
  const auto x = audio.channel(0);
  if (options.method == EnvelopeMethod::kAnalytic) {
    return detail::analytic_magnitude(x);
  }
  detail::require(options.num_bands >= 1, "broadband_envelope: need >= 1 band");
  const double fmax = std::min(options.fmax_hz, 0.45 * audio.fs());
  detail::require(options.fmin_hz < fmax, "broadband_envelope: fs too low for filterbank");
  const double e0 = detail::erb_number(options.fmin_hz);
  const double e1 = detail::erb_number(fmax);
  std::vector<double> env(x.size(), 0.0);
  for (std::size_t b = 0; b < options.num_bands; ++b) {
    const double frac = options.num_bands == 1
                            ? 0.5
                            : static_cast<double>(b) / static_cast<double>(options.num_bands - 1);
    const double fc = detail::erb_number_inverse(e0 + frac * (e1 - e0));
    detail::accumulate_band_envelope(x, fc, audio.fs(), options.compression, env);
  }
  return env;
}

// Temporal envelope of speech: broadband envelope, band-filtered at 512 Hz
// with the least-squares EEG filter, then downsampled to 64 Hz. The input
// rate must be an integer multiple of 512 Hz.
inline MultichannelSignal extract_envelope(const MultichannelSignal& audio,
                                           const BandDef& band,
                                           const EnvelopeOptions& options = {}) {
  std::vector<double> env = broadband_envelope(audio, options);
  MultichannelSignal stream = MultichannelSignal::mono(std::move(env), audio.fs());
  if (stream.fs() != 512.0) {
    const double ratio = stream.fs() / 512.0;
    detail::require(ratio > 1.0 && std::abs(ratio - std::round(ratio)) < 1e-9,
                    "extract_envelope: audio fs must be an integer multiple of 512 Hz");
    stream = resample(stream, 512.0);
  }
  stream = band_filter(stream, band, options.band_filter_order);
  return resample(stream, 64.0);
}

}  // namespace neurotrack::dsp
