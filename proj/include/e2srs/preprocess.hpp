// Copyright 2026 The e2srs Authors
// SPDX-License-Identifier: Apache-2.0

// Channel preprocessing for channel charting: CFR -> CIR, centering shift,
// outlier removal, per-RU TDoA alignment, normalization/truncation, plus the
// TDoA estimator and LoS classifier that feed the training loss.

#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "e2srs/geometry.hpp"

namespace e2srs {
class ConfigFile;
}

namespace e2srs::cc {

using cplx = std::complex<double>;

enum class CirStage { raw, shifted, aligned };

/// M x n_fft complex CIR matrix with RU block boundaries.
struct CirMatrix {
  std::size_t rows = 0;
  std::size_t n_fft = 0;
  std::vector<std::size_t> trps_per_ru;
  std::vector<cplx> data;  // row-major
  CirStage stage = CirStage::raw;

  std::span<cplx> row(std::size_t r) { return {data.data() + r * n_fft, n_fft}; }
  std::span<const cplx> row(std::size_t r) const { return {data.data() + r * n_fft, n_fft}; }
  std::size_t ru_offset(std::size_t k) const;
};

/// M x C nonnegative magnitudes scaled by 1/alpha; the model input.
struct NormalizedCir {
  std::size_t rows = 0;
  std::size_t taps = 0;
  std::vector<double> values;  // row-major
  double alpha = 1.0;

  double at(std::size_t r, std::size_t c) const { return values[r * taps + c]; }
};

struct TdoaVector {
  std::vector<double> seconds;       // zero at each RU reference
  std::vector<std::uint8_t> valid;
};

struct LosMask {
  std::vector<std::uint8_t> flags;  // 1 = LoS
  std::vector<std::uint8_t> valid;
};

struct PreprocessConfig {
  std::size_t taps = 64;                // C
  int outlier_jump = 3;                 // J, taps
  std::size_t outlier_window = 11;      // centered sliding-median window
  double peak_ratio = 10.0;             // detectable: max > ratio * median
  double subcarrier_spacing_hz = 30e3;  // delta f
  double los_papr = 8.0;                // rho
  double los_arrival_fraction = 0.3;    // first arrival: first tap >= fraction * peak
  std::size_t los_arrival_window = 6;   // peak must lie in the first third of this many taps
  double los_level_ratio = 0.75;        // peak must reach this fraction of the snapshot's median row peak
  double tdoa_margin_taps = 1.0;        // slack on |c * tdoa| <= baseline before a TDoA is masked
};

PreprocessConfig preprocess_config_from(const ConfigFile& cfg);

/// Row-wise inverse DFT (1/N convention) of an M x n_fft CFR matrix.
CirMatrix idft_rows(std::span<const std::complex<float>> cfr, std::span<const std::size_t> trps_per_ru,
                    std::size_t n_fft);
CirMatrix idft_rows(std::span<const cplx> cfr, std::span<const std::size_t> trps_per_ru, std::size_t n_fft);

/// Circular rotation of every row by n_fft / 2.
CirMatrix ifft_shift_rows(CirMatrix cir);

/// Index of the largest-magnitude tap (lowest index on ties).
std::size_t peak_index(std::span<const cplx> row);
/// max |x| > ratio * median |x|.
bool has_detectable_peak(std::span<const cplx> row, double ratio);

struct OutlierSplit {
  std::vector<std::size_t> kept;
  std::vector<std::size_t> dropped;
};

/// Per-snapshot reference-TRP peak index for every RU.
std::vector<std::size_t> reference_peaks(const CirMatrix& shifted, const Geometry& g);

/// Decision for snapshot `i` of a sequence of per-RU reference peaks: true if any
/// RU's peak deviates from the centered, edge-truncated sliding median by more than J.
bool is_outlier(std::span<const std::vector<std::size_t>> peaks, std::size_t i, const PreprocessConfig& cfg);

/// Splits a window of shifted CIR matrices (length >= 5) into kept and dropped indices.
OutlierSplit remove_outliers(std::span<const CirMatrix> window, const Geometry& g, const PreprocessConfig& cfg);
OutlierSplit remove_outliers(std::span<const std::vector<std::size_t>> peaks, const PreprocessConfig& cfg);

/// Shifts every RU block so its reference peak lands at tap C/2. Throws NO_PEAK.
CirMatrix tdoa_align(const CirMatrix& shifted, const Geometry& g, const PreprocessConfig& cfg);

/// |cir[m][c]| / alpha for c < C. Throws DEGENERATE_ALPHA for alpha <= 0.
NormalizedCir normalize_truncate(const CirMatrix& aligned, double alpha, std::size_t taps);

/// Max magnitude over all snapshots, rows and taps [0, C).
double compute_norm_factor(std::span<const CirMatrix> training, std::size_t taps);

/// Parabolic-refined peak position in taps, or NaN when the row has no detectable peak.
double refined_peak(std::span<const cplx> row, double ratio);

TdoaVector estimate_tdoa(const CirMatrix& shifted, const Geometry& g, const PreprocessConfig& cfg);

struct LosDecision {
  bool los = false;
  bool valid = false;
};

/// PAPR + early-peak heuristic over taps [0, C) of an aligned row. With a positive
/// `reference_level` the row peak must also reach los_level_ratio * reference_level.
LosDecision classify_los(std::span<const cplx> row, const PreprocessConfig& cfg, double reference_level = 0.0);

/// Per-snapshot features shared by training and online inference.
struct Features {
  bool usable = false;                     // false on NO_PEAK
  std::vector<std::size_t> ref_peaks;      // per RU, shifted domain
  std::vector<double> magnitudes;          // M x C aligned magnitudes (before 1/alpha)
  TdoaVector tdoa;
  LosMask los;
  /// TDoA residual weights: valid, within the baseline bound, LoS at the TRP and at its RU reference.
  std::vector<std::uint8_t> mask;
};

Features extract_features(std::span<const std::complex<float>> cfr, const Geometry& g, std::size_t n_fft,
                          const PreprocessConfig& cfg);

NormalizedCir normalize(const Features& f, std::size_t rows, double alpha, std::size_t taps);

}  // namespace e2srs::cc
