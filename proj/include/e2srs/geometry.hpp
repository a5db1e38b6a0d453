// Copyright 2026 The e2srs Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace e2srs {

using Vec3 = std::array<double, 3>;
using Vec2 = std::array<double, 2>;

inline constexpr double kSpeedOfLight = 299792458.0;

inline double distance(const Vec3& a, const Vec3& b) {
  return std::hypot(a[0] - b[0], a[1] - b[1], a[2] - b[2]);
}

struct Trp {
  std::uint8_t ru_id = 0;
  std::uint8_t trp_id = 0;
  Vec3 position{};
};

struct Ru {
  std::uint8_t ru_id = 0;
  std::vector<Trp> trps;
  std::size_t ref = 0;  // index into trps
};

/// Deployment of K RUs, each with M_k TRPs at known coordinates.
///
/// Rows of every channel matrix follow the order RU 0 TRP 0..M_0-1, RU 1 ..., which
/// is also the on-disk and on-wire order.
class Geometry {
 public:
  Geometry() = default;
  explicit Geometry(std::vector<Ru> rus);

  /// Text form: one line per TRP, `ru_id trp_id x y z [ref]`; `#` starts a comment.
  static Geometry parse(const std::string& text);
  static Geometry load(const std::string& path);
  /// 2 RUs x 4 TRPs around a 50 x 10 m area; TRP 1 of RU 1 is the origin.
  static Geometry default_layout();

  std::string to_text() const;

  const std::vector<Ru>& rus() const { return rus_; }
  std::size_t ru_count() const { return rus_.size(); }
  std::size_t trp_count() const { return total_; }
  std::size_t row_offset(std::size_t k) const { return offsets_[k]; }
  std::size_t ref_row(std::size_t k) const { return offsets_[k] + rus_[k].ref; }
  const Vec3& position(std::size_t row) const { return rus_[ru_of_row_[row]].trps[row - offsets_[ru_of_row_[row]]].position; }
  std::size_t ru_of_row(std::size_t row) const { return ru_of_row_[row]; }
  bool is_ref_row(std::size_t row) const { return ref_row(ru_of_row_[row]) == row; }
  /// Number of non-reference TRPs, sum_k (M_k - 1).
  std::size_t tdoa_count() const { return total_ - rus_.size(); }
  std::vector<std::size_t> trps_per_ru() const;

 private:
  void index();

  std::vector<Ru> rus_;
  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> ru_of_row_;
  std::size_t total_ = 0;
};

}  // namespace e2srs
