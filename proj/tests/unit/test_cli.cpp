// Copyright 2026 The e2srs Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <json.hpp>

#include "cli.hpp"
#include "e2srs/xapp.hpp"
#include "tempdir.hpp"

using namespace e2srs;
using e2srs::cli::dispatch;
namespace et = e2srs::testing;

namespace {

constexpr const char* kConfig =
    "[channel]\nn_fft = 256\nband_start = 28\nband_size = 200\n"
    "[train]\nepochs = 2\npairs_per_epoch = 256\nprobe_pairs = 64\n";

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    et::write_file(dir.file("cfg.ini"), kConfig);
    et::write_file(dir.file("walk.traj"), "interval 0.1\nstatic A 10 8 30\nmove 14 10 1\nstatic B 14 10 30\n");
  }
  int synth(const std::string& out, const std::string& seed = "3") {
    return dispatch({"--log-level", "off", "synth", "--config", dir.file("cfg.ini"), "--trajectory",
                     dir.file("walk.traj"), "--out", dir.file(out), "--seed", seed});
  }
  et::TempDir dir;
};

}  // namespace

TEST_F(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(dispatch({"--log-level", "off", "train", "--help"}), cli::kExitOk);
  EXPECT_EQ(dispatch({"synth", "--trajectory", "x", "--out", dir.file("o.srsd"), "--seed"}), cli::kExitConfig);
  EXPECT_EQ(dispatch({"synth", "--bogus"}), cli::kExitConfig);
  EXPECT_EQ(dispatch({"nosuchcommand"}), cli::kExitConfig);
  EXPECT_EQ(dispatch({"eval", "--predictions", "p.csv", "--group", "nearest"}), cli::kExitConfig);
}

TEST_F(Cli, MissingInputIsRuntimeError) {
  EXPECT_EQ(dispatch({"--log-level", "off", "eval", "--predictions", dir.file("none.csv")}), cli::kExitRuntime);
}

TEST_F(Cli, BadConfigIsConfigError) {
  et::write_file(dir.file("bad.ini"), "[channel]\nn_fft = 100\n");
  EXPECT_EQ(dispatch({"--log-level", "off", "synth", "--config", dir.file("bad.ini"), "--trajectory",
                      dir.file("walk.traj"), "--out",
                      dir.file("x.srsd")}),
            cli::kExitConfig);
}

TEST_F(Cli, SynthWritesManifestAndReplays) {
  ASSERT_EQ(synth("a.srsd"), 0);
  const auto manifest = nlohmann::json::parse(et::read_file(dir.file("a.srsd.manifest.json")));
  EXPECT_EQ(manifest["subcommand"], "synth");
  EXPECT_EQ(manifest["seed"], 3);
  ASSERT_EQ(dispatch({"replay-manifest", dir.file("a.srsd.manifest.json"), "--out", dir.file("b.srsd")}), 0);
  EXPECT_EQ(et::read_file(dir.file("a.srsd")), et::read_file(dir.file("b.srsd")));
  ASSERT_EQ(synth("c.srsd", "4"), 0);
  EXPECT_NE(et::read_file(dir.file("a.srsd")), et::read_file(dir.file("c.srsd")));
}

TEST_F(Cli, TrainInferEvalChain) {
  ASSERT_EQ(synth("d.srsd"), 0);
  ASSERT_EQ(dispatch({"--log-level", "off", "train", "--dataset", dir.file("d.srsd"), "--config",
                      dir.file("cfg.ini"), "--out", dir.file("m.ccw")}),
            0);
  const auto log = et::read_file(dir.file("m.ccw.loss.csv"));
  EXPECT_EQ(std::count(log.begin(), log.end(), '\n'), 4);  // header + epochs 0..2
  ASSERT_EQ(dispatch({"replay-manifest", dir.file("m.ccw.manifest.json"), "--out", dir.file("m2.ccw")}), 0);
  EXPECT_EQ(et::read_file(dir.file("m.ccw")), et::read_file(dir.file("m2.ccw")));

  ASSERT_EQ(dispatch({"--log-level", "off", "infer", "--model", dir.file("m.ccw"), "--dataset",
                      dir.file("d.srsd"), "--out", dir.file("p.csv")}),
            0);
  EXPECT_FALSE(xapp::read_predictions(dir.file("p.csv")).empty());
  ASSERT_EQ(dispatch({"--log-level", "off", "eval", "--predictions", dir.file("p.csv"), "--group", "point",
                      "--out",
                      dir.file("e.csv")}),
            0);
  const auto eval = et::read_file(dir.file("e.csv"));
  EXPECT_NE(eval.find("\n10.00_8.00,"), std::string::npos);
  EXPECT_NE(eval.find("\nall,"), std::string::npos);
}
