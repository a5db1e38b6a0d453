// Copyright 2026 The e2srs Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>

#include "e2srs/error.hpp"
#include "e2srs/model.hpp"
#include "gradcheck.hpp"
#include "tempdir.hpp"

using namespace e2srs;
using namespace e2srs::cc;
namespace et = e2srs::testing;

namespace {

Errc error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::invalid_argument;
}

NormalizedCir random_input(std::size_t rows, std::size_t taps, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  NormalizedCir in;
  in.rows = rows;
  in.taps = taps;
  in.values.resize(rows * taps);
  for (auto& v : in.values) v = u(rng);
  return in;
}

}  // namespace

TEST(Model, DefaultArchitectureShape) {
  auto p = ModelParams::build(8, 64, kDefaultArchitecture);
  // conv 8->16 k7 s2: 64 -> 29; conv 16->32 k5 s2: 29 -> 13; dense 416 -> 64 -> 2.
  const std::size_t expected = (8 * 16 * 7 + 16) + (16 * 32 * 5 + 32) + (32 * 13 * 64 + 64) + (64 * 2 + 2);
  EXPECT_EQ(p.parameter_count(), expected);
  EXPECT_EQ(p.architecture(), kDefaultArchitecture);
}

TEST(Model, BuildErrors) {
  EXPECT_EQ(error_of([] { ModelParams::build(8, 64, "conv:16:7:2,tanh,flatten,dense:3"); }), Errc::dimension_mismatch);
  EXPECT_EQ(error_of([] { ModelParams::build(2, 8, kDefaultArchitecture); }), Errc::dimension_mismatch);
  EXPECT_EQ(error_of([] { ModelParams::build(8, 64, "relu,dense:2"); }), Errc::config_error);
  EXPECT_EQ(error_of([] { ModelParams::build(8, 64, "flatten,dense:x"); }), Errc::config_error);
}

TEST(Model, ZeroInputGivesFinalBias) {
  auto p = ModelParams::build(8, 64, kDefaultArchitecture);
  p.init(1);
  NormalizedCir zero;
  zero.rows = 8;
  zero.taps = 64;
  zero.values.assign(8 * 64, 0.0);
  const auto z = forward(p, zero);
  EXPECT_EQ(z[0], 0.0);
  EXPECT_EQ(z[1], 0.0);

  const auto& last = p.layers.back();
  p.theta[last.b_off] = 0.25;
  p.theta[last.b_off + 1] = -0.5;
  p.output_offset = {10.0, 20.0};
  p.output_scale = {2.0, 4.0};
  const auto z2 = forward(p, zero);
  EXPECT_DOUBLE_EQ(z2[0], 10.5);
  EXPECT_DOUBLE_EQ(z2[1], 18.0);
}

TEST(Model, Deterministic) {
  auto a = ModelParams::build(8, 64, kDefaultArchitecture);
  auto b = ModelParams::build(8, 64, kDefaultArchitecture);
  a.init(42);
  b.init(42);
  EXPECT_EQ(a.theta, b.theta);
  const auto in = random_input(8, 64, 3);
  const auto za = forward(a, in);
  const auto zb = forward(b, in);
  EXPECT_EQ(za, zb);
  b.init(43);
  EXPECT_NE(a.theta, b.theta);
}

TEST(Model, InitIsXavierWithZeroBias) {
  auto p = ModelParams::build(8, 64, kDefaultArchitecture);
  p.init(5);
  for (const auto& l : p.layers) {
    for (std::size_t i = 0; i < l.b_size; ++i) EXPECT_EQ(p.theta[l.b_off + i], 0.0);
    if (l.w_size == 0) continue;
    const double fi = l.kind == LayerKind::conv1d ? l.in * l.kernel : l.in;
    const double fo = l.kind == LayerKind::conv1d ? l.out * l.kernel : l.out;
    const double a = std::sqrt(6.0 / (fi + fo));
    for (std::size_t i = 0; i < l.w_size; ++i) EXPECT_LE(std::abs(p.theta[l.w_off + i]), a);
  }
}

TEST(Model, LipschitzProbe) {
  auto p = ModelParams::build(8, 64, kDefaultArchitecture);
  p.init(7);
  p.output_scale = {26.5, 12.5};
  const auto in = random_input(8, 64, 8);
  auto scaled = in;
  for (auto& v : scaled.values) v *= 1.0 + 1e-12;
  double max_in = 0;
  for (auto v : in.values) max_in = std::max(max_in, v);
  // Max-norm bound: each layer is at most its total absolute weight mass; tanh is 1-Lipschitz.
  double bound = std::max(p.output_scale[0], p.output_scale[1]);
  for (const auto& l : p.layers) {
    if (l.w_size == 0) continue;
    double mass = 0;
    for (std::size_t i = 0; i < l.w_size; ++i) mass += std::abs(p.theta[l.w_off + i]);
    bound *= mass;
  }
  const auto a = forward(p, in);
  const auto b = forward(p, scaled);
  const double change = std::max(std::abs(a[0] - b[0]), std::abs(a[1] - b[1]));
  EXPECT_LE(change, bound * 1e-12 * max_in + 1e-12);
}

TEST(Model, ForwardDimensionMismatch) {
  auto p = ModelParams::build(8, 64, kDefaultArchitecture);
  EXPECT_EQ(error_of([&] { forward(p, random_input(4, 64, 1)); }), Errc::dimension_mismatch);
  EXPECT_EQ(error_of([&] { forward(p, random_input(8, 32, 1)); }), Errc::dimension_mismatch);
}

TEST(Model, OutputMapFromGeometry) {
  auto p = ModelParams::build(8, 64, kDefaultArchitecture);
  set_output_map(p, Geometry::default_layout());
  // x spans [-1, 52], y spans [-2, 23].
  EXPECT_DOUBLE_EQ(p.output_offset[0], 25.5);
  EXPECT_DOUBLE_EQ(p.output_offset[1], 10.5);
  EXPECT_DOUBLE_EQ(p.output_scale[0], 26.5);
  EXPECT_DOUBLE_EQ(p.output_scale[1], 12.5);
}

TEST(Model, SaveLoadRoundTrip) {
  et::TempDir dir;
  auto p = ModelParams::build(8, 64, kDefaultArchitecture);
  p.init(9);
  p.alpha = 0.123456789;
  set_output_map(p, Geometry::default_layout());
  const auto path = dir.file("m.ccw");
  save_params(p, path);
  const auto q = load_params(path, 64);
  EXPECT_TRUE(q == p);
  const auto bytes = et::read_file(path);
  EXPECT_EQ(bytes.substr(0, 4), "CCW1");
  save_params(q, dir.file("again.ccw"));
  EXPECT_EQ(et::read_file(dir.file("again.ccw")), bytes);
}

TEST(Model, LoadErrors) {
  et::TempDir dir;
  auto p = ModelParams::build(8, 64, kDefaultArchitecture);
  p.init(9);
  const auto path = dir.file("m.ccw");
  save_params(p, path);
  const auto bytes = et::read_file(path);

  et::write_file(dir.file("short.ccw"), bytes.substr(0, bytes.size() - 8));
  EXPECT_EQ(error_of([&] { load_params(dir.file("short.ccw")); }), Errc::manifest_mismatch);

  et::write_file(dir.file("long.ccw"), bytes + "x");
  EXPECT_EQ(error_of([&] { load_params(dir.file("long.ccw")); }), Errc::manifest_mismatch);

  EXPECT_EQ(error_of([&] { load_params(path, 32); }), Errc::manifest_mismatch);

  auto bad = bytes;
  bad[0] = 'X';
  et::write_file(dir.file("magic.ccw"), bad);
  EXPECT_EQ(error_of([&] { load_params(dir.file("magic.ccw")); }), Errc::bad_magic);

  // First layer's input width lives right after the kind byte of the manifest.
  auto wrong_in = bytes;
  const std::size_t first_layer = 4 + 4 + 4 + 8 + 16 + 16 + 4;
  wrong_in[first_layer + 4] = 9;
  et::write_file(dir.file("in.ccw"), wrong_in);
  EXPECT_EQ(error_of([&] { load_params(dir.file("in.ccw")); }), Errc::manifest_mismatch);

  EXPECT_EQ(error_of([&] { load_params(dir.file("missing.ccw")); }), Errc::io_error);
}

TEST(Model, BackwardMatchesFiniteDifferences) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto r = et::gradient_check(et::small_instance(seed));
    EXPECT_LE(r.max_rel_error, 1e-4) << "seed " << seed;
  }
}
