// Copyright 2026 The e2srs Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "e2srs/config.hpp"
#include "e2srs/dataset.hpp"
#include "e2srs/error.hpp"
#include "e2srs/preprocess.hpp"
#include "e2srs/synth.hpp"
#include "oracles.hpp"
#include "tempdir.hpp"

using namespace e2srs;
using namespace e2srs::synth;
namespace et = e2srs::testing;

namespace {

ChannelConfig small_config() {
  ChannelConfig c;
  c.n_fft = 256;
  c.band_start = 28;
  c.band_size = 200;
  return c;
}

}  // namespace

TEST(Synth, OracleTdoaExamples) {
  // TRP 2 and the reference are both 5 m from p; TRP 3 is 8 m away.
  const auto g = Geometry::parse("1 1 0 5 0 ref\n1 2 0 -5 0\n1 3 8 0 0\n");
  const auto t = oracle_tdoa({0, 0, 0}, g);
  EXPECT_EQ(t[0], 0.0);
  EXPECT_EQ(t[1], 0.0);
  EXPECT_NEAR(t[2], 3.0 / kSpeedOfLight, 1e-22);
  EXPECT_NEAR(t[2], 1.0007e-8, 1e-12);
}

TEST(Synth, MultilaterationRecoversPosition) {
  const auto g = Geometry::default_layout();
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> ux(0, 50), uy(5, 15);
  const std::vector<std::uint8_t> mask(8, 1);
  for (int i = 0; i < 50; ++i) {
    const Vec3 p{ux(rng), uy(rng), 0.0};
    const auto est = et::multilaterate(g, oracle_tdoa(p, g), mask);
    EXPECT_LT(std::hypot(est[0] - p[0], est[1] - p[1]), 1e-6);
  }
}

TEST(Synth, SinglePathHasFlatMagnitude) {
  auto cfg = small_config();
  cfg.paths = 1;
  cfg.nlos_probability = 0;
  cfg.snr_db = INFINITY;
  Rng rng(1);
  const auto g = Geometry::default_layout();
  const auto s = gen_cfr({12, 9, 0}, g, cfg, rng);
  for (std::size_t r = 0; r < 8; ++r)
    for (std::size_t n = 0; n < cfg.n_fft; ++n) {
      const double mag = std::abs(s.cfr[r * cfg.n_fft + n]);
      if (n >= cfg.band_start && n < cfg.band_start + cfg.band_size)
        EXPECT_NEAR(mag, 1.0, 1e-6);
      else
        EXPECT_EQ(mag, 0.0);
    }
  EXPECT_EQ(s.los, std::vector<std::uint8_t>(8, 1));
}

TEST(Synth, LosDelayFromPhaseSlope) {
  auto cfg = small_config();
  cfg.paths = 1;
  cfg.nlos_probability = 0;
  cfg.snr_db = INFINITY;
  const auto g = Geometry::parse("1 1 0 0 0 ref\n1 2 40 0 0\n");
  Rng rng(2);
  const auto s = gen_cfr({3, 4, 0}, g, cfg, rng);
  // Mean phase step between adjacent subcarriers is -2 pi df tau.
  std::complex<double> acc = 0;
  for (std::size_t n = cfg.band_start; n + 1 < cfg.band_start + cfg.band_size; ++n)
    acc += std::complex<double>(s.cfr[n + 1]) * std::conj(std::complex<double>(s.cfr[n]));
  const double tau = -std::arg(acc) / (2 * std::numbers::pi * cfg.subcarrier_spacing_hz);
  EXPECT_NEAR(tau, 5.0 / kSpeedOfLight, 1e-12);
  EXPECT_NEAR(5.0 / kSpeedOfLight, 1.6678e-8, 1e-12);
}

TEST(Synth, CirEnergyMatchesCfrEnergy) {
  const auto cfg = small_config();
  Rng rng(3);
  const auto g = Geometry::default_layout();
  const auto s = gen_cfr({30, 11, 0}, g, cfg, rng);
  const auto blocks = g.trps_per_ru();
  const auto cir = cc::idft_rows(s.cfr, blocks, cfg.n_fft);
  for (std::size_t r = 0; r < 8; ++r) {
    double ef = 0, et_ = 0;
    for (std::size_t n = 0; n < cfg.n_fft; ++n) {
      ef += std::norm(std::complex<double>(s.cfr[r * cfg.n_fft + n]));
      et_ += std::norm(cir.data[r * cfg.n_fft + n]);
    }
    EXPECT_NEAR(et_, ef / cfg.n_fft, 1e-6 * ef / cfg.n_fft);
  }
}

TEST(Synth, NlosFraction) {
  auto cfg = small_config();
  cfg.nlos_probability = 0.3;
  Rng rng(4);
  const auto g = Geometry::default_layout();
  std::size_t nlos = 0, links = 0;
  for (int i = 0; i < 1250; ++i) {
    const auto s = gen_cfr({25, 10, 0}, g, cfg, rng);
    for (auto l : s.los) nlos += l == 0;
    links += s.los.size();
  }
  ASSERT_EQ(links, 10000u);
  EXPECT_NEAR(static_cast<double>(nlos) / links, 0.3, 0.02);
}

TEST(Synth, DatasetDeterministic) {
  et::TempDir dir;
  auto cfg = small_config();
  cfg.glitch_probability = 0.1;
  const auto traj = Trajectory::load("testpoints:5");
  const auto g = Geometry::default_layout();
  const auto r1 = gen_dataset(g, cfg, traj, dir.file("a.srsd"));
  const auto r2 = gen_dataset(g, cfg, traj, dir.file("b.srsd"));
  EXPECT_EQ(et::read_file(dir.file("a.srsd")), et::read_file(dir.file("b.srsd")));
  EXPECT_EQ(r1.glitch_indices, r2.glitch_indices);
  cfg.seed = 2;
  gen_dataset(g, cfg, traj, dir.file("c.srsd"));
  EXPECT_NE(et::read_file(dir.file("a.srsd")), et::read_file(dir.file("c.srsd")));
}

TEST(Synth, SixteenStaticPoints) {
  et::TempDir dir;
  const auto traj = Trajectory::load("testpoints-static");
  ASSERT_EQ(traj.samples.size(), 1600u);
  ChannelConfig cfg;
  const auto rep = gen_dataset(Geometry::default_layout(), cfg, traj, dir.file("s.srsd"));
  EXPECT_EQ(rep.snapshots, 1600u);
  DatasetReader r(dir.file("s.srsd"));
  EXPECT_EQ(r.size(), 1600u);
  EXPECT_EQ(r.header().n_fft, 1024u);
  const auto s = r.read(1599);
  EXPECT_EQ(s.timestamp_ns, 1599ull * 100'000'000ull);
  EXPECT_DOUBLE_EQ(s.ground_truth[0], default_test_points()[15].position[0]);
}

TEST(Synth, TestPointLayout) {
  const auto pts = default_test_points();
  ASSERT_EQ(pts.size(), 16u);
  EXPECT_EQ(pts.front().label, "A");
  EXPECT_EQ(pts.back().label, "P");
  for (const auto& p : pts) {
    EXPECT_GE(p.position[0], 0.0);
    EXPECT_LE(p.position[0], 50.0);
    EXPECT_GE(p.position[1], 5.0);
    EXPECT_LE(p.position[1], 15.0);
  }
  const auto moving = Trajectory::test_points(10, true);
  EXPECT_GT(moving.samples.size(), 160u);
  std::size_t labelled = 0;
  for (std::size_t i = 1; i < moving.samples.size(); ++i) {
    const auto& a = moving.samples[i - 1].position;
    const auto& b = moving.samples[i].position;
    // Walking at 1 m/s with 0.1 s spacing never jumps more than 0.1 m.
    EXPECT_LE(std::hypot(a[0] - b[0], a[1] - b[1]), 0.1 + 1e-9);
    labelled += !moving.samples[i].label.empty();
  }
  EXPECT_EQ(labelled + 1, 160u);
}

TEST(Synth, TrajectoryParse) {
  const auto t = Trajectory::parse("interval 0.5\nheight 1.5\nstatic X 1 2 3\nmove 2 2 1\n");
  EXPECT_EQ(t.interval_s, 0.5);
  ASSERT_EQ(t.samples.size(), 5u);
  EXPECT_EQ(t.samples[0].label, "X");
  EXPECT_EQ(t.samples[0].position[2], 1.5);
  EXPECT_DOUBLE_EQ(t.samples[4].position[0], 2.0);
  EXPECT_THROW(Trajectory::parse("jump 1 2\n"), Error);
  EXPECT_THROW(Trajectory::parse("move 1 2 1\n"), Error);
  EXPECT_THROW(Trajectory::parse(""), Error);
  EXPECT_THROW(Trajectory::load("testpoints:x"), Error);
}

TEST(Synth, GlitchesMoveReferencePeaks) {
  et::TempDir dir;
  auto cfg = small_config();
  cfg.nlos_probability = 0;
  cfg.glitch_probability = 0.2;
  const auto traj = Trajectory::parse("static A 20 10 60\n");
  const auto g = Geometry::default_layout();
  const auto rep = gen_dataset(g, cfg, traj, dir.file("g.srsd"));
  ASSERT_FALSE(rep.glitch_indices.empty());
  DatasetReader r(dir.file("g.srsd"));
  const auto clean = cc::reference_peaks(cc::ifft_shift_rows(cc::idft_rows(r.read(rep.glitch_indices[0] == 0 ? 1 : 0).cfr, g.trps_per_ru(), 256)), g);
  for (auto i : rep.glitch_indices) {
    const auto pk = cc::reference_peaks(cc::ifft_shift_rows(cc::idft_rows(r.read(i).cfr, g.trps_per_ru(), 256)), g);
    EXPECT_NE(pk, clean) << i;
  }
}

TEST(Synth, ConfigValidation) {
  EXPECT_THROW(channel_config_from(ConfigFile::parse("[channel]\nn_fft = 1000\n")), Error);
  EXPECT_THROW(channel_config_from(ConfigFile::parse("[channel]\nband_size = 2000\n")), Error);
  EXPECT_THROW(channel_config_from(ConfigFile::parse("[channel]\nnlos_probability = 1.5\n")), Error);
  EXPECT_THROW(channel_config_from(ConfigFile::parse("[channel]\ncolour = red\n")), Error);
  const auto c = channel_config_from(ConfigFile::parse("[channel]\nsnr_db = inf\nseed = 9\n"));
  EXPECT_TRUE(std::isinf(c.snr_db));
  EXPECT_EQ(c.seed, 9u);
}
