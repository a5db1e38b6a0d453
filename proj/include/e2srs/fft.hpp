// Copyright 2026 The e2srs Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>
#include <span>

namespace e2srs::dsp {

using cplx = std::complex<double>;

/// In-place iterative radix-2 FFT. Forward uses exp(-j2pi nk/N) and no scaling;
/// inverse uses exp(+j2pi nk/N) and scales by 1/N. Size must be a power of two.
void fft(std::span<cplx> x, bool inverse);

inline void dft(std::span<cplx> x) { fft(x, false); }
inline void idft(std::span<cplx> x) { fft(x, true); }

}  // namespace e2srs::dsp
