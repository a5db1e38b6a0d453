// Copyright 2026 The e2srs Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "e2srs/bytes.hpp"
#include "e2srs/config.hpp"
#include "e2srs/dataset.hpp"
#include "e2srs/error.hpp"
#include "e2srs/geometry.hpp"
#include "e2srs/preprocess.hpp"
#include "e2srs/synth.hpp"
#include "e2srs/train.hpp"
#include "tempdir.hpp"

using namespace e2srs;
namespace et = e2srs::testing;

namespace {

template <class F>
Errc error_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::invalid_argument;
}

DatasetHeader small_header(std::uint8_t flags = kHasGroundTruth) {
  DatasetHeader h;
  h.trps_per_ru = {2, 1};
  h.n_fft = 4;
  h.flags = flags;
  return h;
}

Snapshot small_snapshot(std::uint64_t ts, float v) {
  Snapshot s;
  s.timestamp_ns = ts;
  s.ground_truth = {1.0, 2.0, 0.0};
  s.cfr.assign(12, {v, -v});
  return s;
}

}  // namespace

TEST(Bytes, BigEndianFields) {
  Bytes b;
  ByteWriter w(b);
  w.u8(0x01);
  w.u16(0x0203);
  w.u32(0x04050607);
  w.u64(0x08090A0B0C0D0E0Full);
  w.f32(1.0f);
  w.f64(-2.0);
  EXPECT_EQ(to_hex(b), "0102030405060708090a0b0c0d0e0f3f800000c000000000000000");
  ByteReader r(b, Errc::truncated);
  EXPECT_EQ(r.u8(), 0x01);
  EXPECT_EQ(r.u16(), 0x0203);
  EXPECT_EQ(r.u32(), 0x04050607u);
  EXPECT_EQ(r.u64(), 0x08090A0B0C0D0E0Full);
  EXPECT_EQ(r.f32(), 1.0f);
  EXPECT_EQ(r.f64(), -2.0);
  EXPECT_EQ(r.remaining(), 0u);
  EXPECT_EQ(error_of([&] { r.u8(); }), Errc::truncated);
}

TEST(Bytes, HexRoundTrip) {
  EXPECT_EQ(to_hex(from_hex("00ff7A")), "00ff7a");
  EXPECT_THROW(from_hex("0"), Error);
  EXPECT_THROW(from_hex("zz"), Error);
}

TEST(Config, SectionsAndTypes) {
  auto cfg = ConfigFile::parse("top = 1\n[synth]\n  snr_db = 20.5 # comment\nname=x y\nflag = yes\n\n[train]\nepochs = 3\n");
  EXPECT_TRUE(cfg.has_section(""));
  EXPECT_TRUE(cfg.has_section("synth"));
  SectionReader s(cfg, "synth");
  EXPECT_DOUBLE_EQ(s.get("snr_db", 0.0), 20.5);
  EXPECT_EQ(s.get_str("name", ""), "x y");
  EXPECT_TRUE(s.get_bool("flag", false));
  EXPECT_EQ(s.get_int("missing", 7), 7);
  EXPECT_NO_THROW(s.finish());
  SectionReader t(cfg, "train");
  EXPECT_EQ(error_of([&] { t.finish(); }), Errc::config_error);
}

TEST(Config, Errors) {
  EXPECT_EQ(error_of([] { ConfigFile::parse("[open\n"); }), Errc::config_error);
  EXPECT_EQ(error_of([] { ConfigFile::parse("novalue\n"); }), Errc::config_error);
  auto cfg = ConfigFile::parse("a = 1.5x\nb = 2.5\nc = maybe\n");
  SectionReader r(cfg, "");
  EXPECT_EQ(error_of([&] { r.get("a", 0.0); }), Errc::config_error);
  EXPECT_EQ(error_of([&] { r.get_int("b", 0); }), Errc::config_error);
  EXPECT_EQ(error_of([&] { r.get_bool("c", false); }), Errc::config_error);
  EXPECT_EQ(error_of([] { ConfigFile::load("/nonexistent/e2srs.conf"); }), Errc::io_error);
}

TEST(Geometry, DefaultLayout) {
  const auto g = Geometry::default_layout();
  EXPECT_EQ(g.ru_count(), 2u);
  EXPECT_EQ(g.trp_count(), 8u);
  EXPECT_EQ(g.tdoa_count(), 6u);
  EXPECT_EQ(g.ref_row(0), 0u);
  EXPECT_EQ(g.ref_row(1), 5u);
  EXPECT_TRUE(g.is_ref_row(5));
  EXPECT_FALSE(g.is_ref_row(4));
  EXPECT_EQ(g.ru_of_row(6), 1u);
  EXPECT_EQ(g.position(0), (Vec3{0.0, 0.0, 0.0}));
}

TEST(Geometry, TextRoundTrip) {
  const auto g = Geometry::default_layout();
  const auto h = Geometry::parse(g.to_text());
  ASSERT_EQ(h.trp_count(), g.trp_count());
  for (std::size_t r = 0; r < g.trp_count(); ++r) EXPECT_EQ(h.position(r), g.position(r));
  EXPECT_EQ(h.ref_row(1), g.ref_row(1));
}

TEST(Geometry, ParseErrors) {
  EXPECT_EQ(error_of([] { Geometry::parse("1 1 0 0 0\n1 2 1 0 0\n"); }), Errc::config_error);             // no ref
  EXPECT_EQ(error_of([] { Geometry::parse("1 1 0 0 0 ref\n1 2 1 0 0 ref\n"); }), Errc::config_error);     // two refs
  EXPECT_EQ(error_of([] { Geometry::parse("1 1 0 0 0 ref\n1 2 0 0 0\n"); }), Errc::config_error);         // same spot
  EXPECT_EQ(error_of([] { Geometry::parse("1 1 0 0\n"); }), Errc::config_error);                          // short line
  EXPECT_EQ(error_of([] { Geometry::parse("1 1 0 0 0 main\n"); }), Errc::config_error);                   // bad tag
  EXPECT_EQ(error_of([] { Geometry::parse("# nothing\n"); }), Errc::config_error);                        // empty
}

TEST(Dataset, WriteReadRoundTrip) {
  et::TempDir dir;
  const auto path = dir.file("d.srsd");
  {
    DatasetWriter w(path, small_header(kHasGroundTruth | kHasLosFlags | kHasOracleTdoa));
    for (int i = 0; i < 3; ++i) {
      auto s = small_snapshot(100 + i, static_cast<float>(i));
      s.los = {1, 0, 1};
      s.oracle_tdoa = {0.0, 1e-9 * i, 0.0};
      w.write(s);
    }
  }
  DatasetReader r(path);
  EXPECT_EQ(r.size(), 3u);
  EXPECT_EQ(r.header().trp_count(), 3u);
  EXPECT_EQ(et::read_file(path).size(), r.header().header_size() + 3 * r.header().record_size());
  const auto s = r.read(2);
  EXPECT_EQ(s.timestamp_ns, 102u);
  EXPECT_EQ(s.los, (std::vector<std::uint8_t>{1, 0, 1}));
  EXPECT_DOUBLE_EQ(s.oracle_tdoa[1], 2e-9);
  EXPECT_EQ(s.cfr[5], std::complex<float>(2.0f, -2.0f));
  EXPECT_EQ(r.timestamp(1), 101u);
  EXPECT_EQ(error_of([&] { r.read(3); }), Errc::invalid_argument);
}

TEST(Dataset, NonMonotonicTimestamps) {
  et::TempDir dir;
  const auto path = dir.file("d.srsd");
  {
    DatasetWriter w(path, small_header());
    w.write(small_snapshot(5, 1.0f));
    EXPECT_EQ(error_of([&] { w.write(small_snapshot(5, 1.0f)); }), Errc::non_monotonic_timestamps);
    w.write(small_snapshot(6, 1.0f));
  }
  // Patch the second timestamp on disk to 5.
  auto data = et::read_file(path);
  const auto h = small_header();
  data[h.header_size() + h.record_size() + 7] = 5;
  et::write_file(path, data);
  EXPECT_EQ(error_of([&] { DatasetReader r(path); }), Errc::non_monotonic_timestamps);
}

TEST(Dataset, TruncatedFile) {
  et::TempDir dir;
  const auto path = dir.file("d.srsd");
  {
    DatasetWriter w(path, small_header());
    w.write(small_snapshot(1, 1.0f));
    w.write(small_snapshot(2, 1.0f));
  }
  auto data = et::read_file(path);
  et::write_file(path, data.substr(0, data.size() - 3));
  EXPECT_EQ(error_of([&] { DatasetReader r(path); }), Errc::bad_dimensions);
  et::write_file(path, data.substr(0, 10));
  EXPECT_EQ(error_of([&] { DatasetReader r(path); }), Errc::bad_dimensions);
}

TEST(Dataset, HeaderValidation) {
  auto h = small_header();
  h.n_fft = 6;
  h.snapshot_count = 1;
  EXPECT_EQ(error_of([&] { h.validate(); }), Errc::bad_dimensions);
  h = small_header();
  h.snapshot_count = 1;
  h.trps_per_ru = {1, 0};
  EXPECT_EQ(error_of([&] { h.validate(); }), Errc::bad_dimensions);
  h = small_header();
  h.snapshot_count = 1;
  auto b = encode_dataset_header(h);
  EXPECT_EQ(decode_dataset_header(b).trps_per_ru, h.trps_per_ru);
  b[0] = 0;
  EXPECT_EQ(error_of([&] { decode_dataset_header(b); }), Errc::bad_magic);
}

TEST(Dataset, WriterChecksShape) {
  et::TempDir dir;
  DatasetWriter w(dir.file("d.srsd"), small_header());
  auto s = small_snapshot(1, 1.0f);
  s.cfr.pop_back();
  EXPECT_EQ(error_of([&] { w.write(s); }), Errc::dimension_mismatch);
}

TEST(Dataset, SynthFileLoads) {
  et::TempDir dir;
  const auto path = dir.file("t.srsd");
  const auto g = Geometry::default_layout();
  synth::ChannelConfig cfg;
  const auto traj = synth::Trajectory::parse("interval 0.1\nstatic A 10 10 100\n");
  const auto rep = synth::gen_dataset(g, cfg, traj, path);
  EXPECT_EQ(rep.snapshots, 100u);
  DatasetReader r(path);
  EXPECT_EQ(r.size(), 100u);
  EXPECT_EQ(r.header().trps_per_ru.size(), 2u);
  EXPECT_EQ(r.header().trp_count(), 8u);
  EXPECT_TRUE(r.header().matches(g));
}

TEST(ShippedData, DefaultConfigMatchesBuiltInDefaults) {
  const auto file = ConfigFile::load(std::string(E2SRS_TEST_DATA_DIR) + "/../../data/default.cfg");
  const auto ch = synth::channel_config_from(file);
  const synth::ChannelConfig dch;
  EXPECT_EQ(ch.n_fft, dch.n_fft);
  EXPECT_EQ(ch.band_start, dch.band_start);
  EXPECT_EQ(ch.band_size, dch.band_size);
  EXPECT_EQ(ch.paths, dch.paths);
  EXPECT_EQ(ch.nlos_probability, dch.nlos_probability);
  EXPECT_EQ(ch.excess_delay_min_s, dch.excess_delay_min_s);
  EXPECT_EQ(ch.excess_delay_max_s, dch.excess_delay_max_s);
  EXPECT_EQ(ch.scatter_scale_max, dch.scatter_scale_max);
  EXPECT_EQ(ch.snr_db, dch.snr_db);
  EXPECT_EQ(ch.glitch_min_s, dch.glitch_min_s);
  EXPECT_EQ(ch.glitch_max_s, dch.glitch_max_s);
  EXPECT_EQ(ch.seed, dch.seed);

  const auto pc = cc::preprocess_config_from(file);
  const cc::PreprocessConfig dpc;
  EXPECT_EQ(pc.taps, dpc.taps);
  EXPECT_EQ(pc.outlier_jump, dpc.outlier_jump);
  EXPECT_EQ(pc.outlier_window, dpc.outlier_window);
  EXPECT_EQ(pc.los_papr, dpc.los_papr);
  EXPECT_EQ(pc.los_level_ratio, dpc.los_level_ratio);
  EXPECT_EQ(pc.tdoa_margin_taps, dpc.tdoa_margin_taps);

  const auto tc = cc::train_config_from(file);
  const cc::TrainConfig dtc;
  EXPECT_EQ(tc.learning_rate, dtc.learning_rate);
  EXPECT_EQ(tc.adam_eps, dtc.adam_eps);
  EXPECT_EQ(tc.batch, dtc.batch);
  EXPECT_EQ(tc.epochs, dtc.epochs);
  EXPECT_EQ(tc.pairs_per_epoch, dtc.pairs_per_epoch);
  EXPECT_EQ(tc.speed_of_light, dtc.speed_of_light);
  EXPECT_EQ(tc.architecture, dtc.architecture);
}

TEST(ShippedData, GeometryFileIsDefaultLayout) {
  const auto g = Geometry::load(std::string(E2SRS_TEST_DATA_DIR) + "/../../data/geometry.txt");
  EXPECT_EQ(g.to_text(), Geometry::default_layout().to_text());
}
