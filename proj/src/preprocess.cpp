// Copyright 2026 The e2srs Authors
// SPDX-License-Identifier: Apache-2.0

#include "e2srs/preprocess.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "e2srs/config.hpp"
#include "e2srs/error.hpp"
#include "e2srs/fft.hpp"

namespace e2srs::cc {
namespace {

std::vector<std::size_t> as_size_vec(std::span<const std::size_t> s) { return {s.begin(), s.end()}; }

CirMatrix make_matrix(std::span<const std::size_t> trps_per_ru, std::size_t n_fft) {
  CirMatrix m;
  m.trps_per_ru = as_size_vec(trps_per_ru);
  m.rows = std::accumulate(trps_per_ru.begin(), trps_per_ru.end(), std::size_t{0});
  m.n_fft = n_fft;
  require(n_fft >= 1 && std::has_single_bit(n_fft), Errc::dimension_mismatch, "n_fft must be a power of two");
  m.data.resize(m.rows * n_fft);
  return m;
}

void check_layout(const CirMatrix& cir, const Geometry& g) {
  require(cir.rows == g.trp_count() && cir.trps_per_ru == g.trps_per_ru(), Errc::dimension_mismatch,
          "CIR block layout does not match geometry");
}

double median_of(std::vector<double> v) {
  const std::size_t n = v.size();
  std::sort(v.begin(), v.end());
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::size_t CirMatrix::ru_offset(std::size_t k) const {
  std::size_t off = 0;
  for (std::size_t i = 0; i < k; ++i) off += trps_per_ru[i];
  return off;
}

PreprocessConfig preprocess_config_from(const ConfigFile& cfg) {
  PreprocessConfig p;
  SectionReader r(cfg, "preprocess");
  p.taps = static_cast<std::size_t>(r.get_int("taps", static_cast<long long>(p.taps)));
  p.outlier_jump = static_cast<int>(r.get_int("outlier_jump", p.outlier_jump));
  p.outlier_window = static_cast<std::size_t>(r.get_int("outlier_window", static_cast<long long>(p.outlier_window)));
  p.peak_ratio = r.get("peak_ratio", p.peak_ratio);
  p.subcarrier_spacing_hz = r.get("subcarrier_spacing_hz", p.subcarrier_spacing_hz);
  p.los_papr = r.get("los_papr", p.los_papr);
  p.los_arrival_fraction = r.get("los_arrival_fraction", p.los_arrival_fraction);
  p.los_arrival_window =
      static_cast<std::size_t>(r.get_int("los_arrival_window", static_cast<long long>(p.los_arrival_window)));
  p.los_level_ratio = r.get("los_level_ratio", p.los_level_ratio);
  p.tdoa_margin_taps = r.get("tdoa_margin_taps", p.tdoa_margin_taps);
  r.finish();
  require(p.taps >= 2 && p.outlier_window >= 1 && p.outlier_jump >= 0 && p.subcarrier_spacing_hz > 0 &&
              p.los_arrival_window >= 3 && p.los_level_ratio >= 0 && p.tdoa_margin_taps >= 0,
          Errc::config_error, "invalid [preprocess] values");
  return p;
}

CirMatrix idft_rows(std::span<const cplx> cfr, std::span<const std::size_t> trps_per_ru, std::size_t n_fft) {
  auto m = make_matrix(trps_per_ru, n_fft);
  require(cfr.size() == m.rows * n_fft, Errc::dimension_mismatch,
          fmt::format("CFR has {} samples, expected {} x {}", cfr.size(), m.rows, n_fft));
  std::copy(cfr.begin(), cfr.end(), m.data.begin());
  for (std::size_t r = 0; r < m.rows; ++r) dsp::idft(m.row(r));
  m.stage = CirStage::raw;
  return m;
}

CirMatrix idft_rows(std::span<const std::complex<float>> cfr, std::span<const std::size_t> trps_per_ru,
                    std::size_t n_fft) {
  std::vector<cplx> wide(cfr.begin(), cfr.end());
  return idft_rows(std::span<const cplx>(wide), trps_per_ru, n_fft);
}

CirMatrix ifft_shift_rows(CirMatrix cir) {
  const std::size_t half = cir.n_fft / 2;
  for (std::size_t r = 0; r < cir.rows; ++r) {
    auto row = cir.row(r);
    std::rotate(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(cir.n_fft - half), row.end());
  }
  cir.stage = CirStage::shifted;
  return cir;
}

std::size_t peak_index(std::span<const cplx> row) {
  std::size_t best = 0;
  double best_mag = -1.0;
  for (std::size_t i = 0; i < row.size(); ++i) {
    const double m = std::norm(row[i]);
    if (m > best_mag) {
      best_mag = m;
      best = i;
    }
  }
  return best;
}

bool has_detectable_peak(std::span<const cplx> row, double ratio) {
  if (row.empty()) return false;
  std::vector<double> mags(row.size());
  std::transform(row.begin(), row.end(), mags.begin(), [](cplx v) { return std::abs(v); });
  const double peak = *std::max_element(mags.begin(), mags.end());
  auto mid = mags.begin() + static_cast<std::ptrdiff_t>(mags.size() / 2);
  std::nth_element(mags.begin(), mid, mags.end());
  return peak > 0.0 && peak > ratio * *mid;
}

std::vector<std::size_t> reference_peaks(const CirMatrix& shifted, const Geometry& g) {
  check_layout(shifted, g);
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < g.ru_count(); ++k) out.push_back(peak_index(shifted.row(g.ref_row(k))));
  return out;
}

bool is_outlier(std::span<const std::vector<std::size_t>> peaks, std::size_t i, const PreprocessConfig& cfg) {
  const std::size_t n = peaks.size();
  const std::size_t half = cfg.outlier_window / 2;
  const std::size_t lo = i >= half ? i - half : 0;
  const std::size_t hi = std::min(n, i + half + 1);
  const std::size_t rus = peaks[i].size();
  for (std::size_t k = 0; k < rus; ++k) {
    std::vector<double> w;
    w.reserve(hi - lo);
    for (std::size_t j = lo; j < hi; ++j) w.push_back(static_cast<double>(peaks[j][k]));
    const double med = median_of(std::move(w));
    if (std::abs(static_cast<double>(peaks[i][k]) - med) > cfg.outlier_jump) return true;
  }
  return false;
}

OutlierSplit remove_outliers(std::span<const std::vector<std::size_t>> peaks, const PreprocessConfig& cfg) {
  require(peaks.size() >= 5, Errc::invalid_argument, "outlier removal needs at least 5 snapshots");
  OutlierSplit out;
  for (std::size_t i = 0; i < peaks.size(); ++i) (is_outlier(peaks, i, cfg) ? out.dropped : out.kept).push_back(i);
  return out;
}

OutlierSplit remove_outliers(std::span<const CirMatrix> window, const Geometry& g, const PreprocessConfig& cfg) {
  require(window.size() >= 5, Errc::invalid_argument, "outlier removal needs at least 5 snapshots");
  std::vector<std::vector<std::size_t>> peaks;
  peaks.reserve(window.size());
  for (const auto& m : window) peaks.push_back(reference_peaks(m, g));
  return remove_outliers(std::span<const std::vector<std::size_t>>(peaks), cfg);
}

CirMatrix tdoa_align(const CirMatrix& shifted, const Geometry& g, const PreprocessConfig& cfg) {
  check_layout(shifted, g);
  require(cfg.taps <= shifted.n_fft, Errc::dimension_mismatch, "C exceeds n_fft");
  CirMatrix out = shifted;
  const std::size_t n = shifted.n_fft;
  const std::size_t anchor = cfg.taps / 2;
  for (std::size_t k = 0; k < g.ru_count(); ++k) {
    auto ref = shifted.row(g.ref_row(k));
    require(has_detectable_peak(ref, cfg.peak_ratio), Errc::no_peak,
            fmt::format("RU {} reference row has no detectable peak", g.rus()[k].ru_id));
    const std::size_t p = peak_index(ref);
    // Rotate right by (anchor - p) mod n so tap p moves to `anchor`.
    const std::size_t shift = (anchor + n - p % n) % n;
    for (std::size_t m = 0; m < g.rus()[k].trps.size(); ++m) {
      auto row = out.row(g.row_offset(k) + m);
      std::rotate(row.begin(), row.begin() + static_cast<std::ptrdiff_t>((n - shift) % n), row.end());
    }
  }
  out.stage = CirStage::aligned;
  return out;
}

NormalizedCir normalize_truncate(const CirMatrix& aligned, double alpha, std::size_t taps) {
  require(alpha > 0.0 && std::isfinite(alpha), Errc::degenerate_alpha, fmt::format("alpha = {}", alpha));
  require(taps <= aligned.n_fft, Errc::dimension_mismatch, "C exceeds n_fft");
  NormalizedCir out;
  out.rows = aligned.rows;
  out.taps = taps;
  out.alpha = alpha;
  out.values.resize(out.rows * taps);
  for (std::size_t r = 0; r < aligned.rows; ++r) {
    auto row = aligned.row(r);
    for (std::size_t c = 0; c < taps; ++c) out.values[r * taps + c] = std::abs(row[c]) / alpha;
  }
  return out;
}

double compute_norm_factor(std::span<const CirMatrix> training, std::size_t taps) {
  require(!training.empty(), Errc::empty_set, "empty training set");
  double alpha = 0.0;
  for (const auto& m : training) {
    require(taps <= m.n_fft, Errc::dimension_mismatch, "C exceeds n_fft");
    for (std::size_t r = 0; r < m.rows; ++r) {
      auto row = m.row(r);
      for (std::size_t c = 0; c < taps; ++c) alpha = std::max(alpha, std::abs(row[c]));
    }
  }
  require(alpha > 0.0, Errc::all_zero, "training set is all zero");
  return alpha;
}

double refined_peak(std::span<const cplx> row, double ratio) {
  if (!has_detectable_peak(row, ratio)) return std::nan("");
  const std::size_t n = row.size();
  const std::size_t i = peak_index(row);
  if (n < 3) return static_cast<double>(i);
  const double a = std::abs(row[(i + n - 1) % n]);
  const double b = std::abs(row[i]);
  const double c = std::abs(row[(i + 1) % n]);
  const double denom = a - 2.0 * b + c;
  double delta = 0.0;
  if (denom < 0.0) delta = std::clamp(0.5 * (a - c) / denom, -0.5, 0.5);
  return static_cast<double>(i) + delta;
}

TdoaVector estimate_tdoa(const CirMatrix& shifted, const Geometry& g, const PreprocessConfig& cfg) {
  check_layout(shifted, g);
  const double ts = 1.0 / (static_cast<double>(shifted.n_fft) * cfg.subcarrier_spacing_hz);
  const double n = static_cast<double>(shifted.n_fft);
  TdoaVector out;
  out.seconds.assign(shifted.rows, 0.0);
  out.valid.assign(shifted.rows, 0);
  std::vector<double> pos(shifted.rows);
  for (std::size_t r = 0; r < shifted.rows; ++r) pos[r] = refined_peak(shifted.row(r), cfg.peak_ratio);
  for (std::size_t k = 0; k < g.ru_count(); ++k) {
    const std::size_t ref = g.ref_row(k);
    const bool ref_ok = !std::isnan(pos[ref]);
    out.valid[ref] = ref_ok;
    for (std::size_t m = 0; m < g.rus()[k].trps.size(); ++m) {
      const std::size_t row = g.row_offset(k) + m;
      if (row == ref || !ref_ok || std::isnan(pos[row])) continue;
      double d = pos[row] - pos[ref];
      // circular difference in (-n/2, n/2]
      d = std::remainder(d, n);
      if (d == -n / 2) d = n / 2;
      out.seconds[row] = d * ts;
      out.valid[row] = 1;
    }
  }
  return out;
}

LosDecision classify_los(std::span<const cplx> row, const PreprocessConfig& cfg, double reference_level) {
  const std::size_t taps = std::min(cfg.taps, row.size());
  double peak2 = 0.0;
  double sum2 = 0.0;
  std::size_t peak = 0;
  for (std::size_t c = 0; c < taps; ++c) {
    const double v = std::norm(row[c]);
    sum2 += v;
    if (v > peak2) {
      peak2 = v;
      peak = c;
    }
  }
  if (peak2 <= 0.0) return {false, false};
  const double papr = peak2 / (sum2 / static_cast<double>(taps));
  const double threshold = cfg.los_arrival_fraction * std::sqrt(peak2);
  std::size_t first = peak;
  for (std::size_t c = 0; c < peak; ++c)
    if (std::abs(row[c]) >= threshold) {
      first = c;
      break;
    }
  // Early-peak test: the strongest tap must sit in the first third of the
  // arrival window that opens at the first significant arrival.
  const bool early = 3 * (peak - first) < cfg.los_arrival_window;
  const bool strong = std::sqrt(peak2) >= cfg.los_level_ratio * reference_level;
  return {papr >= cfg.los_papr && early && strong, true};
}

Features extract_features(std::span<const std::complex<float>> cfr, const Geometry& g, std::size_t n_fft,
                          const PreprocessConfig& cfg) {
  const auto blocks = g.trps_per_ru();
  auto shifted = ifft_shift_rows(idft_rows(cfr, blocks, n_fft));
  Features f;
  f.ref_peaks = reference_peaks(shifted, g);
  for (std::size_t k = 0; k < g.ru_count(); ++k)
    if (!has_detectable_peak(shifted.row(g.ref_row(k)), cfg.peak_ratio)) return f;
  f.tdoa = estimate_tdoa(shifted, g, cfg);
  auto aligned = tdoa_align(shifted, g, cfg);
  const std::size_t rows = aligned.rows;
  f.magnitudes.resize(rows * cfg.taps);
  f.los.flags.assign(rows, 0);
  f.los.valid.assign(rows, 0);
  std::vector<double> peaks(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    auto row = aligned.row(r);
    double pk = 0.0;
    for (std::size_t c = 0; c < cfg.taps; ++c) {
      f.magnitudes[r * cfg.taps + c] = std::abs(row[c]);
      pk = std::max(pk, f.magnitudes[r * cfg.taps + c]);
    }
    peaks[r] = pk;
  }
  const double level = median_of(peaks);
  for (std::size_t r = 0; r < rows; ++r) {
    auto d = classify_los(aligned.row(r), cfg, level);
    f.los.flags[r] = d.los;
    f.los.valid[r] = d.valid;
  }
  const double ts = 1.0 / (static_cast<double>(n_fft) * cfg.subcarrier_spacing_hz);
  f.mask.assign(rows, 0);
  for (std::size_t r = 0; r < rows; ++r) {
    if (g.is_ref_row(r)) continue;
    const std::size_t ref = g.ref_row(g.ru_of_row(r));
    // A range difference can never exceed the TRP baseline.
    const double baseline = distance(g.position(r), g.position(ref));
    const bool plausible =
        std::abs(kSpeedOfLight * f.tdoa.seconds[r]) <= baseline + cfg.tdoa_margin_taps * kSpeedOfLight * ts;
    f.mask[r] = f.tdoa.valid[r] && plausible && f.los.flags[r] && f.los.flags[ref];
  }
  f.usable = true;
  return f;
}

NormalizedCir normalize(const Features& f, std::size_t rows, double alpha, std::size_t taps) {
  require(alpha > 0.0 && std::isfinite(alpha), Errc::degenerate_alpha, fmt::format("alpha = {}", alpha));
  require(f.magnitudes.size() == rows * taps, Errc::dimension_mismatch, "feature size");
  NormalizedCir out;
  out.rows = rows;
  out.taps = taps;
  out.alpha = alpha;
  out.values.resize(f.magnitudes.size());
  for (std::size_t i = 0; i < f.magnitudes.size(); ++i) out.values[i] = f.magnitudes[i] / alpha;
  return out;
}

}  // namespace e2srs::cc
