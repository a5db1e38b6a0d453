// Copyright 2026 The e2srs Authors
// SPDX-License-Identifier: Apache-2.0

#include "e2srs/fft.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <utility>

#include "e2srs/error.hpp"

namespace e2srs::dsp {

void fft(std::span<cplx> x, bool inverse) {
  const std::size_t n = x.size();
  require(n >= 1 && std::has_single_bit(n), Errc::dimension_mismatch, "FFT size must be a power of two");
  if (n == 1) return;

  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }

  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    // Twiddles computed directly per index keeps the error at O(eps log n).
    for (std::size_t k = 0; k < half; ++k) {
      const double ang = sign * 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(len);
      const cplx w(std::cos(ang), std::sin(ang));
      for (std::size_t i = k; i < n; i += len) {
        const cplx u = x[i];
        const cplx v = x[i + half] * w;
        x[i] = u + v;
        x[i + half] = u - v;
      }
    }
  }

  if (inverse) {
    const double scale = 1.0 / static_cast<double>(n);
    for (auto& v : x) v *= scale;
  }
}

}  // namespace e2srs::dsp
