#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "neurotrack/core/error.hpp"
#include "neurotrack/core/rng.hpp"
#include "neurotrack/signal/signal.hpp"
#include "neurotrack/speechfeat/features.hpp"

namespace neurotrack::cohortsim {

namespace detail {
using neurotrack::detail::ensure;
using neurotrack::detail::require;
}  // namespace detail

// Temporal response function for one stimulus feature: two Gabor-shaped
// temporal components, each projected to the channel array through its own
// spatial map (rank-2 channel x lag kernel overall).
struct TrfParams {
  struct Component {
    double mu;     // latency of the temporal envelope peak, seconds
    double sigma;  // envelope width, seconds
    double freq;   // intrinsic oscillation, Hz
    double phase;
    double amp;
  };
  std::array<Component, 2> temporal;
  std::vector<double> spatial;  // n_channels x 2, row-major

  static constexpr double kMaxLagS = 0.4;

  std::size_t channels() const { return spatial.size() / 2; }

  // Number of lag taps at the given rate (lag 0 .. kMaxLagS inclusive-exclusive).
  static std::size_t lag_taps(double fs) {
    return static_cast<std::size_t>(std::llround(kMaxLagS * fs)) + 1;
  }

  std::vector<double> temporal_kernel(std::size_t component, double fs) const {
    const auto& c = temporal[component];
    std::vector<double> k(lag_taps(fs));
    for (std::size_t i = 0; i < k.size(); ++i) {
      const double lag = static_cast<double>(i) / fs;
      const double d = lag - c.mu;
      k[i] = c.amp * std::exp(-d * d / (2.0 * c.sigma * c.sigma)) *
             std::cos(2.0 * std::numbers::pi * c.freq * d + c.phase);
    }
    return k;
  }

  // Full channel x lag kernel; reference implementation used by tests.
  std::vector<std::vector<double>> render(double fs) const {
    const std::size_t nc = channels();
    std::vector<std::vector<double>> trf(nc, std::vector<double>(lag_taps(fs), 0.0));
    for (std::size_t comp = 0; comp < 2; ++comp) {
      const auto k = temporal_kernel(comp, fs);
      for (std::size_t c = 0; c < nc; ++c) {
        const double w = spatial[c * 2 + comp];
        for (std::size_t i = 0; i < k.size(); ++i) trf[c][i] += w * k[i];
      }
    }
    return trf;
  }
};

using TrfBank = std::map<std::string, TrfParams>;

// Deterministic population-level TRFs. The same physiology seed yields the
// same base kernels regardless of which cohort is being generated, so
// separate cohorts share a common underlying physiology.
inline TrfBank make_base_trfs(std::uint64_t physiology_seed,
                              const std::vector<std::string>& feature_names,
                              std::size_t n_channels) {
  detail::require(n_channels > 0, "make_base_trfs: need at least one channel");
  TrfBank bank;
  for (const auto& name : feature_names) {
    Rng rng(derive_seed(physiology_seed, mix_seed(std::hash<std::string>{}(name))));
    TrfParams p;
    for (auto& c : p.temporal) {
      c.mu = rng.uniform(0.05, 0.35);
      c.sigma = rng.uniform(0.02, 0.06);
      c.freq = rng.uniform(2.0, 8.0);
      c.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
      c.amp = rng.uniform(0.5, 1.0) * (rng.below(2) ? 1.0 : -1.0);
    }
    p.spatial.resize(n_channels * 2);
    for (auto& w : p.spatial) w = rng.normal();
    // Unit-norm spatial maps so gain is carried by the gain parameter.
    for (std::size_t comp = 0; comp < 2; ++comp) {
      double ss = 0.0;
      for (std::size_t c = 0; c < n_channels; ++c) {
        const double w = p.spatial[c * 2 + comp];
        ss += w * w;
      }
      const double norm = std::sqrt(ss);
      for (std::size_t c = 0; c < n_channels; ++c) p.spatial[c * 2 + comp] /= norm;
    }
    bank[name] = std::move(p);
  }
  return bank;
}

// Per-subject variation: latencies shift, widths/amplitudes scale, spatial
// maps get additive jitter. `scale` = 0 reproduces the base kernels.
inline TrfBank jitter_trfs(const TrfBank& base, double scale, Rng& rng) {
  detail::require(scale >= 0.0 && scale <= 1.0, "jitter_trfs: scale must be in [0, 1]");
  TrfBank out;
  for (const auto& [name, p0] : base) {
    TrfParams p = p0;
    for (auto& c : p.temporal) {
      c.mu = std::clamp(c.mu + scale * rng.normal(0.0, 0.03), 0.02, 0.38);
      c.sigma = std::clamp(c.sigma * (1.0 + scale * rng.normal(0.0, 0.2)), 0.01, 0.08);
      c.amp *= 1.0 + scale * rng.normal(0.0, 0.2);
      c.phase += scale * rng.normal(0.0, 0.3);
    }
    for (auto& w : p.spatial) w += scale * rng.normal(0.0, 0.3 / std::sqrt(static_cast<double>(p.channels())));
    out[name] = std::move(p);
  }
  return out;
}

namespace detail {

// Paul Kellet's economy pink-noise filter, normalized to unit sample std.
inline std::vector<double> pink_noise(std::size_t n, Rng& rng) {
  std::vector<double> x(n);
  double b0 = 0.0, b1 = 0.0, b2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = rng.normal();
    b0 = 0.99765 * b0 + w * 0.0990460;
    b1 = 0.96300 * b1 + w * 0.2965164;
    b2 = 0.57000 * b2 + w * 1.0526913;
    x[i] = b0 + b1 + b2 + w * 0.1848;
  }
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n));
  if (sd > 0.0)
    for (double& v : x) v = (v - mean) / sd;
  return x;
}

// Causal FIR convolution, same-length output (zero initial state).
inline std::vector<double> causal_conv(std::span<const double> x, const std::vector<double>& k) {
  std::vector<double> y(x.size(), 0.0);
  for (std::size_t t = 0; t < x.size(); ++t) {
    const std::size_t kmax = std::min(k.size() - 1, t);
    double acc = 0.0;
    for (std::size_t j = 0; j <= kmax; ++j) acc += k[j] * x[t - j];
    y[t] = acc;
  }
  return y;
}

}  // namespace detail

// Forward model: EEG(c, t) = sum_f gain_f * TRF_f(c, .) * (f / rms(f))(t)
// plus per-channel pink noise scaled by noise_sigma. Features are
// RMS-normalized before convolution so gains are comparable across streams.
// The rank-2 kernel structure is exploited: each feature is convolved with
// its two temporal components once, then spread across channels.
inline MultichannelSignal gen_subject_eeg(const std::vector<speechfeat::FeatureStream>& features,
                                          const std::map<std::string, double>& gains,
                                          const TrfBank& trfs, double noise_sigma,
                                          std::size_t n_channels, Rng& rng) {
  detail::require(!features.empty(), "gen_subject_eeg: no stimulus features");
  detail::require(noise_sigma >= 0.0, "gen_subject_eeg: noise_sigma must be >= 0");
  const double fs = features.front().signal.fs();
  const std::size_t n = features.front().signal.samples();
  for (const auto& f : features) {
    f.validate();
    detail::require(f.signal.samples() == n, "gen_subject_eeg: feature lengths differ");
  }

  MultichannelSignal eeg(n_channels, n, fs);
  for (const auto& f : features) {
    const auto git = gains.find(f.name);
    detail::require(git != gains.end(), "gen_subject_eeg: no gain for feature " + f.name);
    if (git->second == 0.0) continue;
    const auto tit = trfs.find(f.name);
    detail::require(tit != trfs.end(), "gen_subject_eeg: no TRF for feature " + f.name);
    const TrfParams& trf = tit->second;
    detail::require(trf.channels() == n_channels, "gen_subject_eeg: TRF channel count mismatch");

    auto x = f.signal.channel(0);
    double ss = 0.0;
    for (double v : x) ss += v * v;
    const double rms = std::sqrt(ss / static_cast<double>(n));
    if (rms == 0.0) continue;
    std::vector<double> xs(x.begin(), x.end());
    for (double& v : xs) v /= rms;

    const double gain = git->second;
    for (std::size_t comp = 0; comp < 2; ++comp) {
      const auto conv = detail::causal_conv(xs, trf.temporal_kernel(comp, fs));
      for (std::size_t c = 0; c < n_channels; ++c) {
        const double w = gain * trf.spatial[c * 2 + comp];
        if (w == 0.0) continue;
        auto row = eeg.channel(c);
        for (std::size_t t = 0; t < n; ++t) row[t] += w * conv[t];
      }
    }
  }

  if (noise_sigma > 0.0) {
    for (std::size_t c = 0; c < n_channels; ++c) {
      const auto noise = detail::pink_noise(n, rng);
      auto row = eeg.channel(c);
      for (std::size_t t = 0; t < n; ++t) row[t] += noise_sigma * noise[t];
    }
  }
  return eeg;
}

}  // namespace neurotrack::cohortsim
