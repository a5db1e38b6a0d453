// Copyright 2026 The e2srs Authors
// SPDX-License-Identifier: Apache-2.0

// Self-supervised training of the chart network from TDoA and displacement pairs.

#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "e2srs/geometry.hpp"
#include "e2srs/model.hpp"
#include "e2srs/preprocess.hpp"

namespace e2srs {
class ConfigFile;
}

namespace e2srs::cc {

struct TrainConfig {
  double beta = 1.0;
  double epsilon_s = 2.0;  // pair window
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t batch = 64;
  std::size_t epochs = 30;
  std::size_t pairs_per_epoch = 16384;
  std::uint64_t seed = 1;
  double speed_of_light = kSpeedOfLight;
  double ue_height_m = 0.0;          // z is lifted to (x, y, ue_height) for ranging
  double displacement_noise_m = 0.0; // std of additive noise on d-hat
  std::size_t probe_pairs = 512;     // fixed pairs scored after every epoch
  std::size_t threads = 1;
  std::string architecture = kDefaultArchitecture;

  void validate() const;
};

TrainConfig train_config_from(const ConfigFile& cfg);

/// One preprocessed snapshot ready for training.
struct TrainingSample {
  std::size_t index = 0;  // position in the source dataset
  std::uint64_t timestamp_ns = 0;
  Vec3 ground_truth{};
  std::vector<double> input;        // M x C, already divided by alpha
  std::vector<double> tdoa_s;       // per TRP
  std::vector<std::uint8_t> mask;   // per TRP
};

struct TrainingSet {
  std::size_t rows = 0;
  std::size_t taps = 0;
  double alpha = 1.0;
  std::vector<TrainingSample> samples;
  std::size_t outliers = 0;
  std::size_t no_peak = 0;
};

/// Reads an SRSD file, drops outliers and peakless snapshots, and normalizes by the
/// training-set maximum. Requires ground truth (the displacement source).
TrainingSet build_training_set(const std::string& dataset_path, const Geometry& g, const PreprocessConfig& cfg);

struct PairSample {
  std::size_t i = 0;  // indices into TrainingSet::samples
  std::size_t j = 0;
  double displacement_m = 0.0;

  bool operator==(const PairSample&) const = default;
};

struct LossBreakdown {
  double total = 0.0;
  double tdoa = 0.0;          // normalized TDoA term
  double displacement = 0.0;  // mean displacement term
  std::size_t pairs = 0;
  std::size_t masked_out = 0;  // non-reference TRP slots with mask 0

  bool operator==(const LossBreakdown&) const = default;
};

/// Sum over non-reference rows of mask * ((|z - x_m| - |z - x_ref|) - c * tdoa)^2.
/// Adds d/dz to `dz` when non-null.
double tdoa_sample_loss(const Vec2& z, std::span<const double> tdoa_s, std::span<const std::uint8_t> mask,
                        const Geometry& g, double c, double ue_height = 0.0, Vec2* dz = nullptr);

double tdoa_pair_loss(const Vec2& zi, const Vec2& zj, std::span<const double> tdoa_i, std::span<const double> tdoa_j,
                      std::span<const std::uint8_t> mask_i, std::span<const std::uint8_t> mask_j, const Geometry& g,
                      double c, double ue_height = 0.0);

/// (|zi - zj| - d)^2; the gradient is taken as zero where zi == zj.
double displacement_pair_loss(const Vec2& zi, const Vec2& zj, double d, Vec2* dzi = nullptr, Vec2* dzj = nullptr);

/// Mean over the batch of l_tdoa / (2 * sum_k (M_k - 1)) + beta * mean of l_d.
LossBreakdown total_loss(std::span<const PairSample> batch, const TrainingSet& set, const ModelParams& p,
                         const TrainConfig& cfg, const Geometry& g);

/// Loss and its gradient with respect to theta. The batch is reduced over a fixed
/// partition, so the result does not depend on cfg.threads.
LossBreakdown loss_and_gradient(std::span<const PairSample> batch, const TrainingSet& set, const ModelParams& p,
                                const TrainConfig& cfg, const Geometry& g, std::vector<double>& grad);

/// Every (i, j), i < j, with |t_j - t_i| <= epsilon. d-hat comes from ground truth
/// plus optional Gaussian noise drawn from `rng`.
std::vector<PairSample> valid_pairs(const TrainingSet& set, const TrainConfig& cfg, std::mt19937_64& rng);

/// Draws `count` distinct pairs uniformly from `pool`. Throws NO_VALID_PAIRS on an empty pool.
std::vector<PairSample> sample_pairs(std::span<const PairSample> pool, std::size_t count, std::mt19937_64& rng);

struct Adam {
  std::vector<double> m, v;
  std::uint64_t step = 0;

  void update(std::vector<double>& theta, std::span<const double> grad, const TrainConfig& cfg);
};

struct EpochLog {
  std::size_t epoch = 0;       // 0 = before training
  double train_mean = 0.0;     // mean batch loss over the epoch (probe loss at epoch 0)
  LossBreakdown probe;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochLog> log;
};

using EpochCallback = std::function<void(const EpochLog&)>;

TrainResult train(const TrainingSet& set, const Geometry& g, const TrainConfig& cfg, const EpochCallback& on_epoch = {});

/// CSV: epoch,train_mean,total,tdoa,displacement,pairs,masked_out with %.17g doubles.
void write_loss_log(const std::vector<EpochLog>& log, const std::string& path);

}  // namespace e2srs::cc
