// Copyright 2026 The e2srs Authors
// SPDX-License-Identifier: Apache-2.0

// Synthetic multipath CFR generator with geometric ground truth.

#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "e2srs/dataset.hpp"
#include "e2srs/geometry.hpp"

namespace e2srs {
class ConfigFile;
}

namespace e2srs::synth {

using Rng = std::mt19937_64;

struct ChannelConfig {
  std::uint32_t n_fft = 1024;
  double subcarrier_spacing_hz = 30e3;
  std::uint32_t band_start = 212;  // first occupied subcarrier index
  std::uint32_t band_size = 600;
  std::uint32_t paths = 3;         // direct path + (paths - 1) scattered paths
  double nlos_probability = 0.15;
  double excess_delay_min_s = 100e-9;
  double excess_delay_max_s = 500e-9;
  double nlos_direct_gain_min = 0.1;  // blocked direct path attenuation
  double nlos_direct_gain_max = 0.3;
  double scatter_scale_min = 0.3;     // scattered magnitude = scale * Rayleigh(sigma = 0.5)
  double scatter_scale_max = 0.8;
  double snr_db = 20.0;               // per occupied subcarrier, relative to unit LoS gain; inf = noiseless
  double ru_timing_offset_std_s = 0.0;
  double glitch_probability = 0.0;    // per snapshot, one RU jumps in timing
  double glitch_min_s = 0.5e-6;
  double glitch_max_s = 2.0e-6;
  std::uint64_t seed = 1;

  void validate() const;
};

ChannelConfig channel_config_from(const ConfigFile& cfg);

struct TrajectorySample {
  Vec3 position{};
  double speed = 0.0;  // m/s over the step that led here; 0 for static samples
  std::string label;   // test point label, empty while moving
};

struct Trajectory {
  double interval_s = 0.1;
  std::vector<TrajectorySample> samples;

  /// Text form, one directive per line:
  ///   interval <s> | height <m> | static <label> <x> <y> <count> | move <x> <y> <speed>
  static Trajectory parse(const std::string& text);
  /// `testpoints[-static][:N]` builds the 16-point layout, otherwise reads a file.
  static Trajectory load(const std::string& spec);
  /// 16 static test points A..P in two rows over the 50 x 10 m area. With `with_moves`,
  /// walks between points at 1 m/s and finishes with the loop B C D E L M N O P A B.
  static Trajectory test_points(std::size_t per_point, bool with_moves, double height = 0.0);
};

struct TestPoint {
  std::string label;
  Vec2 position;
};
std::vector<TestPoint> default_test_points();

/// Per-TRP geometric TDoA (seconds) w.r.t. each RU's reference; zero at references.
std::vector<double> oracle_tdoa(const Vec3& p, const Geometry& g);

/// One snapshot of CFRs at position p. `ru_offsets_s` adds a common delay to each RU.
Snapshot gen_cfr(const Vec3& p, const Geometry& g, const ChannelConfig& cfg, Rng& rng,
                 std::span<const double> ru_offsets_s = {});

struct GenerationReport {
  std::size_t snapshots = 0;
  std::size_t links = 0;
  std::size_t nlos_links = 0;
  std::vector<std::size_t> glitch_indices;
};

DatasetHeader dataset_header_for(const Geometry& g, const ChannelConfig& cfg);

GenerationReport gen_dataset(const Geometry& g, const ChannelConfig& cfg, const Trajectory& traj,
                             const std::string& out_path);

}  // namespace e2srs::synth
