#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "neurotrack/core/error.hpp"
#include "neurotrack/dsp/fft.hpp"
#include "neurotrack/signal/signal.hpp"

namespace neurotrack::dsp {

// Frequency band of interest. Canonical EEG bands are listed below.
struct BandDef {
  std::string name;
  double low_hz = 0.0;
  double high_hz = 0.0;
};

inline const std::vector<BandDef>& canonical_bands() {
  static const std::vector<BandDef> bands = {
      {"delta", 0.5, 4.0},  {"theta", 4.0, 8.0}, {"alpha", 8.0, 12.0},
      {"beta", 12.0, 25.0}, {"broad", 0.5, 32.0},
  };
  return bands;
}

inline const BandDef& band_by_name(const std::string& name) {
  for (const auto& b : canonical_bands()) {
    if (b.name == name) return b;
  }
  throw InvalidArgument("unknown band: " + name);
}

// Linear-phase FIR filter. Coefficients are symmetric about the midpoint and
// the order is even, so the group delay order/2 is an integer sample count.
struct FirFilter {
  std::vector<double> coefficients;  // length order + 1
  std::size_t order = 0;
  double band_low_hz = 0.0;
  double band_high_hz = 0.0;
  double fs_designed = 0.0;
};

// DTFT of the coefficients at frequency f_hz.
inline std::complex<double> frequency_response(const FirFilter& filter, double f_hz) {
  const double w = 2.0 * std::numbers::pi * f_hz / filter.fs_designed;
  std::complex<double> acc(0.0, 0.0);
  for (std::size_t n = 0; n < filter.coefficients.size(); ++n) {
    acc += filter.coefficients[n] *
           std::complex<double>(std::cos(w * static_cast<double>(n)),
                                -std::sin(w * static_cast<double>(n)));
  }
  return acc;
}

namespace detail {

using neurotrack::detail::ensure;
using neurotrack::detail::require;

struct DesignSegment {
  double w0, w1;   // normalized angular band, within [0, pi]
  double desired;  // target amplitude
};

// Weighted least-squares design of a type-I (even order, symmetric) FIR
// filter on a dense frequency grid. Segments carry unit weight; gaps between
// them are don't-care transition bands. Solves the half-coefficient normal
// equations, exploiting Q[n][m] = (c[|n-m|] + c[n+m]) / 2.
inline std::vector<double> fir_ls_halfband(const std::vector<DesignSegment>& segments,
                                           std::size_t order) {
  const std::size_t half = order / 2;
  const std::size_t ncoef = half + 1;
  const std::size_t grid = 16 * ncoef;
  std::vector<double> c(2 * half + 1, 0.0);
  std::vector<double> b(ncoef, 0.0);
  const double dw = std::numbers::pi / static_cast<double>(grid - 1);
  for (std::size_t k = 0; k < grid; ++k) {
    const double w = dw * static_cast<double>(k);
    double desired = 0.0;
    bool weighted = false;
    for (const auto& seg : segments) {
      if (w >= seg.w0 - 1e-12 && w <= seg.w1 + 1e-12) {
        desired = seg.desired;
        weighted = true;
        break;
      }
    }
    if (!weighted) continue;
    // cos(j*w) by recurrence over j.
    double prev = 1.0, cur = std::cos(w);
    const double twice = 2.0 * cur;
    c[0] += 1.0;
    b[0] += desired;
    for (std::size_t j = 1; j < c.size(); ++j) {
      c[j] += cur;
      if (j < ncoef) b[j] += desired * cur;
      const double nxt = twice * cur - prev;
      prev = cur;
      cur = nxt;
    }
  }

  std::vector<double> q(ncoef * ncoef);
  for (std::size_t n = 0; n < ncoef; ++n) {
    for (std::size_t m = 0; m <= n; ++m) {
      const double v = 0.5 * (c[n - m] + c[n + m]);
      q[n * ncoef + m] = v;
      q[m * ncoef + n] = v;
    }
  }

  // Cholesky with a one-shot ridge retry; the normal matrix is positive
  // definite but can be near-singular for wide don't-care regions.
  std::vector<double> a(b);
  auto solve = [&](double ridge) -> bool {
    std::vector<double> l(q);
    for (std::size_t i = 0; i < ncoef; ++i) l[i * ncoef + i] += ridge;
    for (std::size_t i = 0; i < ncoef; ++i) {
      for (std::size_t j = 0; j <= i; ++j) {
        double sum = l[i * ncoef + j];
        for (std::size_t k = 0; k < j; ++k) sum -= l[i * ncoef + k] * l[j * ncoef + k];
        if (i == j) {
          if (sum <= 0.0) return false;
          l[i * ncoef + i] = std::sqrt(sum);
        } else {
          l[i * ncoef + j] = sum / l[j * ncoef + j];
        }
      }
    }
    a = b;
    for (std::size_t i = 0; i < ncoef; ++i) {
      double sum = a[i];
      for (std::size_t k = 0; k < i; ++k) sum -= l[i * ncoef + k] * a[k];
      a[i] = sum / l[i * ncoef + i];
    }
    for (std::size_t ii = ncoef; ii-- > 0;) {
      double sum = a[ii];
      for (std::size_t k = ii + 1; k < ncoef; ++k) sum -= l[k * ncoef + ii] * a[k];
      a[ii] = sum / l[ii * ncoef + ii];
    }
    return true;
  };
  if (!solve(0.0)) {
    double trace = 0.0;
    for (std::size_t i = 0; i < ncoef; ++i) trace += q[i * ncoef + i];
    ensure(solve(1e-10 * trace / static_cast<double>(ncoef)),
           "fir_ls_halfband: normal equations not positive definite");
  }

  // Expand half coefficients to the symmetric impulse response.
  std::vector<double> h(order + 1, 0.0);
  h[half] = a[0];
  for (std::size_t n = 1; n <= half; ++n) {
    h[half - n] = 0.5 * a[n];
    h[half + n] = 0.5 * a[n];
  }
  return h;
}

inline double to_angular(double f_hz, double fs) {
  return 2.0 * std::numbers::pi * f_hz / fs;
}

}  // namespace detail

// Least-squares linear-phase bandpass design with 10% transition bands:
// the lower stopband ends at 0.9 * low and the upper stopband starts at
// 1.1 * high; transitions are don't-care. low == 0 designs a lowpass.
inline FirFilter design_fir(const BandDef& band, double fs, std::size_t order) {
  detail::require(order % 2 == 0, "design_fir: order must be even");
  detail::require(order >= 2, "design_fir: order too small");
  detail::require(fs > 0.0, "design_fir: fs must be > 0");
  detail::require(band.low_hz >= 0.0 && band.high_hz < 0.5 * fs,
                  "design_fir: band edges outside (0, fs/2)");
  detail::require(band.low_hz < band.high_hz, "design_fir: degenerate band (low >= high)");

  const double nyq = 0.5 * fs;
  std::vector<detail::DesignSegment> segments;
  if (band.low_hz > 0.0) {
    segments.push_back({0.0, detail::to_angular(0.9 * band.low_hz, fs), 0.0});
  }
  segments.push_back({detail::to_angular(band.low_hz, fs),
                      detail::to_angular(band.high_hz, fs), 1.0});
  const double stop_hi = 1.1 * band.high_hz;
  if (stop_hi < nyq) {
    segments.push_back({detail::to_angular(stop_hi, fs), std::numbers::pi, 0.0});
  }

  FirFilter filter;
  filter.coefficients = detail::fir_ls_halfband(segments, order);
  filter.order = order;
  filter.band_low_hz = band.low_hz;
  filter.band_high_hz = band.high_hz;
  filter.fs_designed = fs;
  return filter;
}

// Highpass variant used when a band's upper edge coincides with the Nyquist
// frequency of an already band-limited signal (e.g. the broad band on 64 Hz
// data); the passband extends to Nyquist and only the low edge is shaped.
inline FirFilter design_fir_highpass(double low_hz, double fs, std::size_t order) {
  detail::require(order % 2 == 0, "design_fir_highpass: order must be even");
  detail::require(low_hz > 0.0 && low_hz < 0.5 * fs,
                  "design_fir_highpass: cutoff outside (0, fs/2)");
  std::vector<detail::DesignSegment> segments = {
      {0.0, detail::to_angular(0.9 * low_hz, fs), 0.0},
      {detail::to_angular(low_hz, fs), std::numbers::pi, 1.0},
  };
  FirFilter filter;
  filter.coefficients = detail::fir_ls_halfband(segments, order);
  filter.order = order;
  filter.band_low_hz = low_hz;
  filter.band_high_hz = 0.5 * fs;
  filter.fs_designed = fs;
  return filter;
}

// Convolve every channel with the filter and advance by the group delay
// order/2, so the output stays time-aligned with the input. Edges are
// zero-padded; output length equals input length.
inline MultichannelSignal apply_fir_compensated(const MultichannelSignal& signal,
                                                const FirFilter& filter) {
  detail::require(std::abs(signal.fs() - filter.fs_designed) <= 1e-9 * filter.fs_designed,
                  "apply_fir_compensated: filter designed at a different fs");
  detail::require(signal.samples() > 0, "apply_fir_compensated: empty signal");
  const std::size_t delay = filter.order / 2;
  MultichannelSignal out(signal.channels(), signal.samples(), signal.fs());
  out.channel_labels() = signal.channel_labels();
  for (std::size_t ch = 0; ch < signal.channels(); ++ch) {
    const auto x = signal.channel(ch);
    const std::vector<double> xv(x.begin(), x.end());
    const std::vector<double> y = convolve_full(xv, filter.coefficients);
    auto o = out.channel(ch);
    for (std::size_t t = 0; t < signal.samples(); ++t) o[t] = y[t + delay];
  }
  return out;
}

// Band filter that degrades to a highpass when the band's upper edge
// reaches the Nyquist frequency of an already band-limited signal.
inline MultichannelSignal band_filter(const MultichannelSignal& signal,
                                      const BandDef& band, std::size_t order) {
  const double nyq = 0.5 * signal.fs();
  if (1.1 * band.high_hz >= nyq) {
    detail::require(band.low_hz > 0.0,
                    "band_filter: band covers the whole spectrum at this fs");
    return apply_fir_compensated(signal,
                                 design_fir_highpass(band.low_hz, signal.fs(), order));
  }
  return apply_fir_compensated(signal, design_fir(band, signal.fs(), order));
}

}  // namespace neurotrack::dsp
