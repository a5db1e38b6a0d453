// Copyright 2026 The e2srs Authors
// SPDX-License-Identifier: Apache-2.0

#include "e2srs/synth.hpp"

#include <fmt/format.h>

#include <bit>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "e2srs/config.hpp"
#include "e2srs/error.hpp"

namespace e2srs::synth {
namespace {

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

}  // namespace

void ChannelConfig::validate() const {
  require(n_fft >= 2 && std::has_single_bit(n_fft), Errc::config_error, "n_fft must be a power of two");
  require(band_size >= 1 && static_cast<std::uint64_t>(band_start) + band_size <= n_fft, Errc::config_error,
          "occupied band must lie within [0, n_fft)");
  require(subcarrier_spacing_hz > 0, Errc::config_error, "subcarrier spacing must be positive");
  require(paths >= 1, Errc::config_error, "paths must be >= 1");
  require(nlos_probability >= 0 && nlos_probability <= 1, Errc::config_error, "nlos_probability outside [0, 1]");
  require(excess_delay_min_s > 0 && excess_delay_max_s >= excess_delay_min_s, Errc::config_error,
          "excess delays must be positive and ordered");
  require(nlos_direct_gain_min >= 0 && nlos_direct_gain_max >= nlos_direct_gain_min, Errc::config_error,
          "nlos direct gains must be ordered");
  require(scatter_scale_min >= 0 && scatter_scale_max >= scatter_scale_min, Errc::config_error,
          "scatter scales must be ordered");
  require(ru_timing_offset_std_s >= 0, Errc::config_error, "timing offset std must be >= 0");
  require(glitch_probability >= 0 && glitch_probability <= 1 && glitch_max_s >= glitch_min_s && glitch_min_s >= 0,
          Errc::config_error, "invalid glitch settings");
}

ChannelConfig channel_config_from(const ConfigFile& cfg) {
  ChannelConfig c;
  SectionReader r(cfg, "channel");
  c.n_fft = static_cast<std::uint32_t>(r.get_int("n_fft", c.n_fft));
  c.subcarrier_spacing_hz = r.get("subcarrier_spacing_hz", c.subcarrier_spacing_hz);
  c.band_start = static_cast<std::uint32_t>(r.get_int("band_start", c.band_start));
  c.band_size = static_cast<std::uint32_t>(r.get_int("band_size", c.band_size));
  c.paths = static_cast<std::uint32_t>(r.get_int("paths", c.paths));
  c.nlos_probability = r.get("nlos_probability", c.nlos_probability);
  c.excess_delay_min_s = r.get("excess_delay_min_s", c.excess_delay_min_s);
  c.excess_delay_max_s = r.get("excess_delay_max_s", c.excess_delay_max_s);
  c.nlos_direct_gain_min = r.get("nlos_direct_gain_min", c.nlos_direct_gain_min);
  c.nlos_direct_gain_max = r.get("nlos_direct_gain_max", c.nlos_direct_gain_max);
  c.scatter_scale_min = r.get("scatter_scale_min", c.scatter_scale_min);
  c.scatter_scale_max = r.get("scatter_scale_max", c.scatter_scale_max);
  c.snr_db = r.get("snr_db", c.snr_db);
  c.ru_timing_offset_std_s = r.get("ru_timing_offset_std_s", c.ru_timing_offset_std_s);
  c.glitch_probability = r.get("glitch_probability", c.glitch_probability);
  c.glitch_min_s = r.get("glitch_min_s", c.glitch_min_s);
  c.glitch_max_s = r.get("glitch_max_s", c.glitch_max_s);
  c.seed = static_cast<std::uint64_t>(r.get_int("seed", static_cast<long long>(c.seed)));
  r.finish();
  c.validate();
  return c;
}

std::vector<TestPoint> default_test_points() {
  // A..H left to right on the lower row, I..P right to left on the upper row,
  // so P sits above A and L above E.
  std::vector<TestPoint> pts;
  for (int i = 0; i < 8; ++i) pts.push_back({std::string(1, static_cast<char>('A' + i)), {4.0 + 6.0 * i, 7.5}});
  for (int i = 0; i < 8; ++i) pts.push_back({std::string(1, static_cast<char>('I' + i)), {46.0 - 6.0 * i, 12.5}});
  return pts;
}

namespace {

struct TrajectoryBuilder {
  Trajectory t;
  double height = 0.0;
  bool have_pos = false;
  Vec3 pos{};

  void add_static(const std::string& label, double x, double y, std::size_t count) {
    pos = {x, y, height};
    have_pos = true;
    for (std::size_t i = 0; i < count; ++i) t.samples.push_back({pos, 0.0, label});
  }

  void add_move(double x, double y, double speed) {
    require(speed > 0, Errc::config_error, "move speed must be positive");
    require(have_pos, Errc::config_error, "move needs a starting point");
    const double step = speed * t.interval_s;
    const double dx = x - pos[0];
    const double dy = y - pos[1];
    const double len = std::hypot(dx, dy);
    if (len == 0.0) return;
    const auto steps = static_cast<std::size_t>(std::floor(len / step));
    const Vec3 start = pos;
    for (std::size_t k = 1; k <= steps; ++k) {
      const double s = static_cast<double>(k) * step / len;
      pos = {start[0] + s * dx, start[1] + s * dy, height};
      t.samples.push_back({pos, speed, ""});
    }
  }
};

}  // namespace

Trajectory Trajectory::parse(const std::string& text) {
  TrajectoryBuilder b;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string cmd;
    if (!(ls >> cmd)) continue;
    auto bad = [&] { fail(Errc::config_error, fmt::format("trajectory line {}: malformed '{}'", lineno, cmd)); };
    if (cmd == "interval") {
      if (!(ls >> b.t.interval_s) || b.t.interval_s <= 0) bad();
    } else if (cmd == "height") {
      if (!(ls >> b.height)) bad();
    } else if (cmd == "static") {
      std::string label;
      double x = 0, y = 0;
      long long n = 0;
      if (!(ls >> label >> x >> y >> n) || n < 1) bad();
      b.add_static(label, x, y, static_cast<std::size_t>(n));
    } else if (cmd == "move") {
      double x = 0, y = 0, v = 0;
      if (!(ls >> x >> y >> v)) bad();
      b.add_move(x, y, v);
    } else {
      bad();
    }
  }
  require(!b.t.samples.empty(), Errc::config_error, "trajectory has no samples");
  return b.t;
}

Trajectory Trajectory::test_points(std::size_t per_point, bool with_moves, double height) {
  TrajectoryBuilder b;
  b.height = height;
  const auto pts = default_test_points();
  for (const auto& p : pts) {
    if (with_moves && b.have_pos) b.add_move(p.position[0], p.position[1], 1.0);
    b.add_static(p.label, p.position[0], p.position[1], per_point);
  }
  if (with_moves) {
    for (const char* l : {"B", "C", "D", "E", "L", "M", "N", "O", "P", "A", "B"}) {
      const auto& p = pts[static_cast<std::size_t>(l[0] - 'A')];
      b.add_move(p.position[0], p.position[1], 1.0);
    }
  }
  return b.t;
}

Trajectory Trajectory::load(const std::string& spec) {
  for (const std::string prefix : {"testpoints-static", "testpoints"}) {
    if (spec.rfind(prefix, 0) != 0) continue;
    auto rest = spec.substr(prefix.size());
    if (!rest.empty() && rest[0] != ':') continue;
    std::size_t n = 100;
    if (!rest.empty()) {
      try {
        n = std::stoul(rest.substr(1));
      } catch (const std::exception&) {
        fail(Errc::config_error, "bad test point count in '" + spec + "'");
      }
    }
    require(n >= 1, Errc::config_error, "test point count must be >= 1");
    return test_points(n, prefix == "testpoints");
  }
  std::ifstream f(spec);
  require(f.good(), Errc::io_error, "cannot open trajectory file " + spec);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

std::vector<double> oracle_tdoa(const Vec3& p, const Geometry& g) {
  std::vector<double> out(g.trp_count(), 0.0);
  for (std::size_t row = 0; row < g.trp_count(); ++row) {
    if (g.is_ref_row(row)) continue;
    const auto& ref = g.position(g.ref_row(g.ru_of_row(row)));
    out[row] = (distance(p, g.position(row)) - distance(p, ref)) / kSpeedOfLight;
  }
  return out;
}

Snapshot gen_cfr(const Vec3& p, const Geometry& g, const ChannelConfig& cfg, Rng& rng,
                 std::span<const double> ru_offsets_s) {
  const std::size_t m = g.trp_count();
  const std::size_t n = cfg.n_fft;
  Snapshot s;
  s.ground_truth = p;
  s.los.assign(m, 1);
  s.oracle_tdoa = oracle_tdoa(p, g);
  s.cfr.assign(m * n, {0.0f, 0.0f});

  const bool noisy = std::isfinite(cfg.snr_db);
  const double noise_std = noisy ? std::sqrt(std::pow(10.0, -cfg.snr_db / 10.0) / 2.0) : 0.0;
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<std::pair<double, std::complex<double>>> paths;
  std::vector<std::complex<double>> w(cfg.band_size);

  for (std::size_t row = 0; row < m; ++row) {
    const std::size_t k = g.ru_of_row(row);
    const double offset = k < ru_offsets_s.size() ? ru_offsets_s[k] : 0.0;
    const double tau_los = distance(p, g.position(row)) / kSpeedOfLight + offset;
    const bool nlos = uniform(rng, 0.0, 1.0) < cfg.nlos_probability;
    s.los[row] = nlos ? 0 : 1;

    paths.clear();
    const double direct = nlos ? uniform(rng, cfg.nlos_direct_gain_min, cfg.nlos_direct_gain_max) : 1.0;
    paths.emplace_back(tau_los, std::complex<double>(direct, 0.0));
    for (std::uint32_t q = 1; q < cfg.paths; ++q) {
      const double excess = uniform(rng, cfg.excess_delay_min_s, cfg.excess_delay_max_s);
      const double scale = uniform(rng, cfg.scatter_scale_min, cfg.scatter_scale_max);
      const double u = uniform(rng, std::numeric_limits<double>::min(), 1.0);
      const double rayleigh = 0.5 * std::sqrt(-2.0 * std::log(u));
      const double phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
      paths.emplace_back(tau_los + excess, std::polar(scale * rayleigh, phase));
    }

    for (std::size_t i = 0; i < cfg.band_size; ++i) {
      const double f = static_cast<double>(cfg.band_start + i) * cfg.subcarrier_spacing_hz;
      std::complex<double> acc = 0.0;
      for (const auto& [tau, gain] : paths) acc += gain * std::polar(1.0, -2.0 * std::numbers::pi * f * tau);
      w[i] = acc;
    }
    if (noisy)
      for (auto& v : w) v += std::complex<double>(noise_std * gauss(rng), noise_std * gauss(rng));
    for (std::size_t i = 0; i < cfg.band_size; ++i)
      s.cfr[row * n + cfg.band_start + i] = {static_cast<float>(w[i].real()), static_cast<float>(w[i].imag())};
  }
  return s;
}

DatasetHeader dataset_header_for(const Geometry& g, const ChannelConfig& cfg) {
  DatasetHeader h;
  for (auto m : g.trps_per_ru()) h.trps_per_ru.push_back(static_cast<std::uint8_t>(m));
  h.n_fft = cfg.n_fft;
  h.subcarrier_spacing_hz = cfg.subcarrier_spacing_hz;
  h.flags = kHasGroundTruth | kHasLosFlags | kHasOracleTdoa;
  return h;
}

GenerationReport gen_dataset(const Geometry& g, const ChannelConfig& cfg, const Trajectory& traj,
                             const std::string& out_path) {
  cfg.validate();
  require(!traj.samples.empty(), Errc::config_error, "empty trajectory");
  Rng rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> base_offsets(g.ru_count());
  for (auto& o : base_offsets) o = cfg.ru_timing_offset_std_s * gauss(rng);

  DatasetWriter writer(out_path, dataset_header_for(g, cfg));
  GenerationReport report;
  const auto interval_ns = static_cast<std::uint64_t>(std::llround(traj.interval_s * 1e9));
  std::vector<double> offsets(g.ru_count());
  for (std::size_t i = 0; i < traj.samples.size(); ++i) {
    offsets = base_offsets;
    if (cfg.glitch_probability > 0 && uniform(rng, 0.0, 1.0) < cfg.glitch_probability) {
      const auto k = std::uniform_int_distribution<std::size_t>(0, g.ru_count() - 1)(rng);
      const double mag = uniform(rng, cfg.glitch_min_s, cfg.glitch_max_s);
      offsets[k] += uniform(rng, 0.0, 1.0) < 0.5 ? -mag : mag;
      report.glitch_indices.push_back(i);
    }
    auto snap = gen_cfr(traj.samples[i].position, g, cfg, rng, offsets);
    snap.timestamp_ns = static_cast<std::uint64_t>(i) * interval_ns;
    for (auto l : snap.los) report.nlos_links += l == 0;
    report.links += snap.los.size();
    writer.write(snap);
  }
  writer.close();
  report.snapshots = traj.samples.size();
  return report;
}

}  // namespace e2srs::synth
