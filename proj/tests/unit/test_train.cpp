// Copyright 2026 The e2srs Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <map>
#include <set>
#include <random>

#include "e2srs/config.hpp"
#include "e2srs/error.hpp"
#include "e2srs/synth.hpp"
#include "e2srs/train.hpp"
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

TrainingSet timestamps_only(std::vector<double> seconds) {
  TrainingSet s;
  s.rows = 2;
  s.taps = 8;
  for (std::size_t i = 0; i < seconds.size(); ++i) {
    TrainingSample t;
    t.index = i;
    t.timestamp_ns = static_cast<std::uint64_t>(seconds[i] * 1e9);
    t.ground_truth = {static_cast<double>(i), 0.0, 0.0};
    s.samples.push_back(t);
  }
  return s;
}

// Small synthetic training set on disk, shared across tests in this file.
class SynthSet : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new et::TempDir;
    synth::ChannelConfig cfg;
    cfg.n_fft = 256;
    cfg.band_start = 28;
    cfg.band_size = 200;
    const auto traj = synth::Trajectory::parse("interval 0.1\nstatic A 10 8 20\nmove 20 12 1\nstatic B 20 12 20\n");
    synth::gen_dataset(Geometry::default_layout(), cfg, traj, dir_->file("train.srsd"));
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }
  static std::string path() { return dir_->file("train.srsd"); }
  static inline et::TempDir* dir_ = nullptr;
};

}  // namespace

TEST(Loss, TdoaHandExample) {
  // One RU: reference at (0, 5, 0), TRP at (3, 4, 0); z = (0, 0); c * tdoa = 1.
  const auto g = Geometry::parse("1 1 0 5 0 ref\n1 2 3 4 0\n");
  const std::vector<double> tdoa = {0.0, 1.0 / kSpeedOfLight};
  const std::vector<std::uint8_t> mask = {0, 1};
  EXPECT_NEAR(tdoa_sample_loss({0.0, 0.0}, tdoa, mask, g, kSpeedOfLight), 1.0, 1e-15);
  const std::vector<std::uint8_t> none = {0, 0};
  EXPECT_EQ(tdoa_pair_loss({0, 0}, {1, 1}, tdoa, tdoa, none, none, g, kSpeedOfLight), 0.0);
}

TEST(Loss, TdoaZeroAtOraclePosition) {
  const auto g = Geometry::default_layout();
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> ux(0, 50), uy(5, 15);
  for (int i = 0; i < 100; ++i) {
    const Vec3 p{ux(rng), uy(rng), 0.0};
    const auto t = synth::oracle_tdoa(p, g);
    const std::vector<std::uint8_t> mask(8, 1);
    EXPECT_LE(tdoa_sample_loss({p[0], p[1]}, t, mask, g, kSpeedOfLight), 1e-18);
  }
}

TEST(Loss, TdoaIsNotTranslationInvariant) {
  const auto g = Geometry::default_layout();
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> ux(0, 50), uy(5, 15), uo(-3, 3);
  const std::vector<std::uint8_t> mask(8, 1);
  for (int i = 0; i < 50; ++i) {
    const Vec3 a{ux(rng), uy(rng), 0.0};
    const Vec3 b{ux(rng), uy(rng), 0.0};
    const auto ta = synth::oracle_tdoa(a, g);
    const auto tb = synth::oracle_tdoa(b, g);
    const Vec2 off{uo(rng), uo(rng)};
    const double base = tdoa_pair_loss({a[0], a[1]}, {b[0], b[1]}, ta, tb, mask, mask, g, kSpeedOfLight);
    const double moved =
        tdoa_pair_loss({a[0] + off[0], a[1] + off[1]}, {b[0] + off[0], b[1] + off[1]}, ta, tb, mask, mask, g, kSpeedOfLight);
    EXPECT_GT(moved, base);
  }
}

TEST(Loss, Displacement) {
  EXPECT_EQ(displacement_pair_loss({1, 1}, {1, 1}, 0.0), 0.0);
  EXPECT_EQ(displacement_pair_loss({0, 0}, {3, 4}, 5.0), 0.0);
  EXPECT_EQ(displacement_pair_loss({0, 0}, {0, 0}, 2.0), 4.0);
  EXPECT_EQ(displacement_pair_loss({0, 0}, {3, 4}, 2.0), displacement_pair_loss({3, 4}, {0, 0}, 2.0));
  Vec2 gi{0, 0}, gj{0, 0};
  displacement_pair_loss({0, 0}, {0, 0}, 2.0, &gi, &gj);
  EXPECT_EQ(gi, (Vec2{0, 0}));
  EXPECT_EQ(gj, (Vec2{0, 0}));
}

TEST(Loss, TotalHandComputed) {
  auto inst = et::small_instance(3);
  inst.batch.resize(1);
  const auto& a = inst.set.samples[inst.batch[0].i];
  const auto& b = inst.set.samples[inst.batch[0].j];
  const auto za = forward(inst.params, NormalizedCir{2, 8, a.input, 1.0});
  const auto zb = forward(inst.params, NormalizedCir{2, 8, b.input, 1.0});
  const double lt = tdoa_pair_loss(za, zb, a.tdoa_s, b.tdoa_s, a.mask, b.mask, inst.geometry, kSpeedOfLight);
  const double ld = displacement_pair_loss(za, zb, inst.batch[0].displacement_m);
  const auto lb = total_loss(inst.batch, inst.set, inst.params, inst.cfg, inst.geometry);
  // One RU with two TRPs: one TDoA per sample, two samples per pair.
  EXPECT_NEAR(lb.tdoa, lt / 2.0, 1e-12 * lt);
  EXPECT_NEAR(lb.displacement, ld, 1e-12 * ld);
  EXPECT_NEAR(lb.total, lt / 2.0 + inst.cfg.beta * ld, 1e-12 * (lt + ld));
  EXPECT_EQ(lb.pairs, 1u);
}

TEST(Loss, BetaLinearAndZero) {
  auto inst = et::small_instance(4);
  inst.cfg.beta = 0.0;
  const auto l0 = total_loss(inst.batch, inst.set, inst.params, inst.cfg, inst.geometry);
  EXPECT_EQ(l0.total, l0.tdoa);
  for (double beta : {0.5, 1.0, 3.0}) {
    inst.cfg.beta = beta;
    const auto l = total_loss(inst.batch, inst.set, inst.params, inst.cfg, inst.geometry);
    EXPECT_NEAR(l.total, l0.tdoa + beta * l.displacement, 1e-12 * l.total);
    EXPECT_EQ(l.displacement, l0.displacement);
  }
}

TEST(Loss, DuplicatedBatchIsUnchanged) {
  auto inst = et::small_instance(5);
  std::vector<double> g1, g2;
  const auto l1 = loss_and_gradient(inst.batch, inst.set, inst.params, inst.cfg, inst.geometry, g1);
  auto twice = inst.batch;
  twice.insert(twice.end(), inst.batch.begin(), inst.batch.end());
  const auto l2 = loss_and_gradient(twice, inst.set, inst.params, inst.cfg, inst.geometry, g2);
  EXPECT_NEAR(l2.total, l1.total, 1e-12 * l1.total);
  for (std::size_t k = 0; k < g1.size(); ++k) EXPECT_NEAR(g2[k], g1[k], 1e-12 * (1.0 + std::abs(g1[k])));
}

TEST(Loss, EmptyBatch) {
  auto inst = et::small_instance(1);
  EXPECT_EQ(error_of([&] { total_loss({}, inst.set, inst.params, inst.cfg, inst.geometry); }), Errc::empty_batch);
}

TEST(Loss, MaskedTdoaHasExactlyZeroInfluence) {
  auto inst = et::small_instance(6);
  std::vector<double> g1, g2;
  const auto l1 = loss_and_gradient(inst.batch, inst.set, inst.params, inst.cfg, inst.geometry, g1);
  for (auto& s : inst.set.samples)
    for (std::size_t r = 0; r < s.mask.size(); ++r)
      if (!s.mask[r]) s.tdoa_s[r] += 1e-6 * static_cast<double>(r + 1);
  const auto l2 = loss_and_gradient(inst.batch, inst.set, inst.params, inst.cfg, inst.geometry, g2);
  EXPECT_EQ(l1, l2);
  EXPECT_EQ(g1, g2);
}

TEST(Loss, AllMaskedAndBetaZeroGivesZeroGradient) {
  auto inst = et::small_instance(7);
  inst.cfg.beta = 0.0;
  for (auto& s : inst.set.samples) std::fill(s.mask.begin(), s.mask.end(), 0);
  std::vector<double> g;
  const auto l = loss_and_gradient(inst.batch, inst.set, inst.params, inst.cfg, inst.geometry, g);
  EXPECT_EQ(l.total, 0.0);
  for (double v : g) EXPECT_EQ(v, 0.0);
}

TEST(Loss, ThreadCountDoesNotChangeResult) {
  auto inst = et::small_instance(8);
  std::vector<double> g1, g4;
  const auto l1 = loss_and_gradient(inst.batch, inst.set, inst.params, inst.cfg, inst.geometry, g1);
  inst.cfg.threads = 4;
  const auto l4 = loss_and_gradient(inst.batch, inst.set, inst.params, inst.cfg, inst.geometry, g4);
  EXPECT_EQ(l1, l4);
  EXPECT_EQ(g1, g4);
}

TEST(Pairs, WindowRespected) {
  const auto set = timestamps_only({0, 1, 10});
  TrainConfig cfg;
  cfg.epsilon_s = 2.0;
  std::mt19937_64 rng(1);
  const auto pool = valid_pairs(set, cfg, rng);
  ASSERT_EQ(pool.size(), 1u);
  EXPECT_EQ(pool[0].i, 0u);
  EXPECT_EQ(pool[0].j, 1u);
  EXPECT_DOUBLE_EQ(pool[0].displacement_m, 1.0);
  for (int k = 0; k < 20; ++k) {
    const auto b = sample_pairs(pool, 4, rng);
    ASSERT_EQ(b.size(), 1u);
    EXPECT_EQ(b[0], pool[0]);
  }
}

TEST(Pairs, NoValidPairs) {
  const auto set = timestamps_only({0, 5, 10});
  TrainConfig cfg;
  cfg.epsilon_s = 2.0;
  std::mt19937_64 rng(1);
  const auto pool = valid_pairs(set, cfg, rng);
  EXPECT_TRUE(pool.empty());
  EXPECT_EQ(error_of([&] { sample_pairs(pool, 4, rng); }), Errc::no_valid_pairs);
}

TEST(Pairs, WithoutReplacementAndDeterministic) {
  std::vector<double> ts;
  for (int i = 0; i < 50; ++i) ts.push_back(0.1 * i);
  const auto set = timestamps_only(ts);
  TrainConfig cfg;
  std::mt19937_64 rng(3);
  const auto pool = valid_pairs(set, cfg, rng);
  std::mt19937_64 r1(9), r2(9);
  const auto a = sample_pairs(pool, 64, r1);
  const auto b = sample_pairs(pool, 64, r2);
  EXPECT_EQ(a, b);
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& p : a) {
    EXPECT_TRUE(seen.insert({p.i, p.j}).second);
    EXPECT_LE(set.samples[p.j].timestamp_ns - set.samples[p.i].timestamp_ns, 2'000'000'000u);
  }
}

TEST(Pairs, UniformHistogram) {
  // 20 samples 1 s apart with a 1 s window: 19 neighbouring pairs.
  std::vector<double> ts;
  for (int i = 0; i < 20; ++i) ts.push_back(i);
  const auto set = timestamps_only(ts);
  TrainConfig cfg;
  cfg.epsilon_s = 1.0;
  std::mt19937_64 rng(4);
  const auto pool = valid_pairs(set, cfg, rng);
  ASSERT_EQ(pool.size(), 19u);
  std::map<std::size_t, double> hist;
  const int draws = 10000;
  for (int d = 0; d < draws; ++d) hist[sample_pairs(pool, 1, rng)[0].i] += 1;
  const double expected = static_cast<double>(draws) / 19.0;
  double chi2 = 0;
  for (std::size_t i = 0; i < 19; ++i) chi2 += (hist[i] - expected) * (hist[i] - expected) / expected;
  // 5% critical value of chi-square with 18 degrees of freedom.
  EXPECT_LT(chi2, 28.869);
}

TEST(Pairs, DisplacementNoise) {
  std::vector<double> ts;
  for (int i = 0; i < 30; ++i) ts.push_back(0.1 * i);
  const auto set = timestamps_only(ts);
  TrainConfig cfg;
  cfg.displacement_noise_m = 0.5;
  std::mt19937_64 rng(5);
  const auto pool = valid_pairs(set, cfg, rng);
  bool differs = false;
  for (const auto& p : pool) {
    EXPECT_GE(p.displacement_m, 0.0);
    differs |= p.displacement_m != static_cast<double>(p.j - p.i);
  }
  EXPECT_TRUE(differs);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  TrainConfig cfg;
  cfg.learning_rate = 0.01;
  std::vector<double> theta = {1.0, -2.0, 0.5};
  const std::vector<double> grad = {3.0, -0.2, 0.0};
  Adam adam;
  adam.update(theta, grad, cfg);
  // Bias-corrected first step is lr * g / (|g| + eps).
  EXPECT_NEAR(theta[0], 1.0 - 0.01, 1e-9);
  EXPECT_NEAR(theta[1], -2.0 + 0.01, 1e-9);
  EXPECT_EQ(theta[2], 0.5);
  EXPECT_EQ(adam.step, 1u);
}

TEST(TrainConfigTest, ReadsSection) {
  auto cfg = ConfigFile::parse("[train]\nepochs = 3\nbeta = 0.5\narchitecture = conv:4:3:1,tanh,flatten,dense:2\n");
  const auto t = train_config_from(cfg);
  EXPECT_EQ(t.epochs, 3u);
  EXPECT_EQ(t.beta, 0.5);
  EXPECT_EQ(t.architecture, "conv:4:3:1,tanh,flatten,dense:2");
  EXPECT_EQ(error_of([] { train_config_from(ConfigFile::parse("[train]\nbatch = 0\n")); }), Errc::config_error);
  EXPECT_EQ(error_of([] { train_config_from(ConfigFile::parse("[train]\nepoch = 3\n")); }), Errc::config_error);
}

TEST_F(SynthSet, BuildTrainingSet) {
  const auto g = Geometry::default_layout();
  PreprocessConfig pc;
  const auto set = build_training_set(path(), g, pc);
  EXPECT_EQ(set.rows, 8u);
  EXPECT_EQ(set.taps, 64u);
  EXPECT_GT(set.samples.size(), 20u);
  double mx = 0;
  for (const auto& s : set.samples) {
    EXPECT_EQ(s.input.size(), 8u * 64u);
    for (auto v : s.input) mx = std::max(mx, v);
  }
  EXPECT_DOUBLE_EQ(mx, 1.0);

  const auto wrong = Geometry::parse("1 1 0 0 0 ref\n1 2 5 0 0\n");
  EXPECT_EQ(error_of([&] { build_training_set(path(), wrong, pc); }), Errc::model_mismatch);
}

TEST_F(SynthSet, OneEpochReducesLoss) {
  const auto g = Geometry::default_layout();
  const auto set = build_training_set(path(), g, PreprocessConfig{});
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.pairs_per_epoch = 2048;
  const auto res = train(set, g, cfg);
  ASSERT_EQ(res.log.size(), 2u);
  EXPECT_LE(res.log[1].train_mean, res.log[0].train_mean);
  EXPECT_LE(res.log[1].probe.total, res.log[0].probe.total);
}

TEST_F(SynthSet, ZeroLearningRateKeepsParams) {
  const auto g = Geometry::default_layout();
  const auto set = build_training_set(path(), g, PreprocessConfig{});
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.pairs_per_epoch = 256;
  cfg.learning_rate = 0.0;
  const auto res = train(set, g, cfg);
  auto init = ModelParams::build(8, 64, cfg.architecture);
  init.init(cfg.seed);
  EXPECT_EQ(res.params.theta, init.theta);
}

TEST_F(SynthSet, SameSeedSameLog) {
  const auto g = Geometry::default_layout();
  const auto set = build_training_set(path(), g, PreprocessConfig{});
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.pairs_per_epoch = 256;
  const auto a = train(set, g, cfg);
  const auto b = train(set, g, cfg);
  EXPECT_EQ(a.params.theta, b.params.theta);
  et::TempDir dir;
  write_loss_log(a.log, dir.file("a.csv"));
  write_loss_log(b.log, dir.file("b.csv"));
  const auto text = et::read_file(dir.file("a.csv"));
  EXPECT_EQ(text, et::read_file(dir.file("b.csv")));
  EXPECT_EQ(text.substr(0, text.find('\n')), "epoch,train_mean,total,tdoa,displacement,pairs,masked_out");
  cfg.seed = 2;
  EXPECT_NE(train(set, g, cfg).params.theta, a.params.theta);
}
