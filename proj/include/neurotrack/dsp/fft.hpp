#pragma once

#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

#include "neurotrack/core/error.hpp"

namespace neurotrack::dsp {

// Iterative radix-2 Cooley-Tukey transform; size must be a power of two.
inline void fft_inplace(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  detail::require(n > 0 && (n & (n - 1)) == 0, "fft: size must be a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = (inverse ? 2.0 : -2.0) * std::numbers::pi / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(angle), std::sin(angle));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
  if (inverse) {
    const double inv = 1.0 / static_cast<double>(n);
    for (auto& v : a) v *= inv;
  }
}

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Full linear convolution of a real signal with a real kernel
// (output length = n + m - 1). Uses direct evaluation for small products
// and FFT overlap-add otherwise.
inline std::vector<double> convolve_full(const std::vector<double>& x,
                                         const std::vector<double>& h) {
  const std::size_t n = x.size(), m = h.size();
  detail::require(n > 0 && m > 0, "convolve: empty input");
  std::vector<double> y(n + m - 1, 0.0);
  if (static_cast<double>(n) * static_cast<double>(m) < 1.5e6) {
    for (std::size_t i = 0; i < n; ++i) {
      const double xi = x[i];
      if (xi == 0.0) continue;
      for (std::size_t k = 0; k < m; ++k) y[i + k] += xi * h[k];
    }
    return y;
  }
  const std::size_t block = next_pow2(std::max<std::size_t>(4 * m, 8192));
  const std::size_t step = block - m + 1;
  std::vector<std::complex<double>> hf(block, 0.0);
  for (std::size_t k = 0; k < m; ++k) hf[k] = h[k];
  fft_inplace(hf, false);
  std::vector<std::complex<double>> buf(block);
  for (std::size_t start = 0; start < n; start += step) {
    const std::size_t len = std::min(step, n - start);
    std::fill(buf.begin(), buf.end(), std::complex<double>(0.0, 0.0));
    for (std::size_t i = 0; i < len; ++i) buf[i] = x[start + i];
    fft_inplace(buf, false);
    for (std::size_t i = 0; i < block; ++i) buf[i] *= hf[i];
    fft_inplace(buf, true);
    const std::size_t out_len = std::min(block, y.size() - start);
    for (std::size_t i = 0; i < out_len && i < len + m - 1; ++i) {
      y[start + i] += buf[i].real();
    }
  }
  return y;
}

}  // namespace neurotrack::dsp
