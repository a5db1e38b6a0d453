// Copyright 2026 The e2srs Authors
// SPDX-License-Identifier: Apache-2.0

// Localization xApp: indication -> preprocess -> chart inference -> smoothing -> CSV.

#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "e2srs/geometry.hpp"
#include "e2srs/model.hpp"
#include "e2srs/net.hpp"
#include "e2srs/preprocess.hpp"
#include "e2srs/wire.hpp"

namespace e2srs::xapp {

using cc::Features;
using cc::ModelParams;
using cc::PreprocessConfig;

struct PredictionRecord {
  std::uint64_t sequence = 0;
  std::uint64_t timestamp_ns = 0;
  std::uint32_t ue_id = 0;
  Vec2 raw{};
  Vec2 smooth{};
  std::optional<Vec2> ground_truth;
  double latency_us = 0.0;

  /// Euclidean error of the smoothed estimate, NaN without ground truth.
  double error_m() const;
};

/// Component-wise mean of the last min(W, |history|) entries.
Vec2 moving_average(std::span<const Vec2> history, std::size_t window);

/// Snapshot handed to the localizer, from the wire or straight from a dataset file.
struct SnapshotInput {
  std::uint64_t sequence = 0;
  std::uint64_t timestamp_ns = 0;
  std::uint32_t ue_id = 0;
  std::vector<std::size_t> trps_per_ru;
  std::size_t n_fft = 0;
  std::vector<std::complex<float>> cfr;  // M x n_fft
  std::optional<Vec2> ground_truth;
};

SnapshotInput from_indication(const wire::RicIndication& ind);

/// Shared by the online xApp and offline batch inference so both produce identical
/// records. Outlier decisions use a centered window, so a snapshot is emitted once
/// half a window of later snapshots has arrived (or on flush()).
class StreamingLocalizer {
 public:
  StreamingLocalizer(ModelParams model, Geometry geometry, PreprocessConfig cfg, std::size_t window);

  /// Throws MODEL_MISMATCH when the snapshot layout disagrees with model or geometry.
  std::vector<PredictionRecord> push(SnapshotInput in);
  std::vector<PredictionRecord> flush();

  std::uint64_t outliers() const { return outliers_; }
  std::uint64_t no_peak() const { return no_peak_; }

 private:
  struct Pending {
    SnapshotInput meta;
    Features features;
    Vec2 raw{};
    double process_us = 0.0;
  };
  struct UeState {
    std::deque<Pending> pending;
    std::deque<std::vector<std::size_t>> peaks;  // peaks of pending plus up to half a window of history
    std::size_t history = 0;                     // entries in `peaks` that precede pending.front()
    std::size_t seen = 0;
    std::deque<Vec2> raw;                        // last W raw estimates
  };

  std::vector<PredictionRecord> drain(UeState& ue, bool final);
  std::optional<PredictionRecord> emit(UeState& ue, Pending& p, bool outlier);

  ModelParams model_;
  Geometry geometry_;
  PreprocessConfig cfg_;
  std::size_t window_;
  std::map<std::uint32_t, UeState> ues_;
  std::uint64_t outliers_ = 0, no_peak_ = 0;
};

/// Streaming CSV writer for prediction records (%.17g doubles).
class PredictionWriter {
 public:
  explicit PredictionWriter(const std::string& path);
  ~PredictionWriter();
  void write(const PredictionRecord& r);
  void close();

 private:
  std::FILE* f_ = nullptr;
};

inline constexpr const char* kPredictionHeader =
    "timestamp_ns,ue_id,raw_x,raw_y,smooth_x,smooth_y,gt_x,gt_y,err_m,latency_us";

std::string format_record(const PredictionRecord& r);
std::vector<PredictionRecord> read_predictions(const std::string& path);

struct PipelineConfig {
  std::string model_path;
  std::string geometry = "default";
  std::size_t window = 5;
  std::string out_csv;
  net::Endpoint ric{"127.0.0.1", net::kDefaultXappPort};
  std::uint32_t request_id = 1;
  PreprocessConfig preprocess;
  std::string truth_dataset;       // optional SRSD file supplying ground truth by sequence
  std::uint64_t max_records = 0;   // stop after this many indications (0 = unbounded)
  double idle_timeout_s = 0.0;     // stop after this long without indications (0 = never)
};

struct PipelineSummary {
  std::uint64_t indications = 0;
  std::uint64_t records = 0;
  std::uint64_t outliers = 0;
  std::uint64_t no_peak = 0;
  double max_latency_us = 0.0;
};

using RecordSink = std::function<void(const PredictionRecord&)>;

/// Loads the model and geometry; C in the weight file must match cfg.preprocess.taps.
StreamingLocalizer make_localizer(const PipelineConfig& cfg);

/// Online path: subscribe at the RIC and process indications until `stop`, the
/// record limit, or the idle timeout. Throws SUBSCRIPTION_REJECTED or CONNECTION_LOST.
PipelineSummary run_pipeline(const PipelineConfig& cfg, const std::atomic<bool>* stop = nullptr,
                             const RecordSink& sink = {});

/// Offline path over a dataset file with the same localizer.
PipelineSummary infer_offline(const PipelineConfig& cfg, const std::string& dataset_path,
                              const RecordSink& sink = {});

struct ErrorStats {
  std::string group;
  std::size_t n = 0;
  double p10 = 0, p50 = 0, p90 = 0, mean = 0;
};

/// Linear interpolation at rank (n - 1) * p / 100 of the sorted values.
double percentile(std::vector<double> values, double p);

enum class Grouping { global, point };

/// Per-group error statistics plus an "all" row. Point groups are named after the
/// default test point at the ground truth position, else "x_y". Throws NO_GROUND_TRUTH.
std::vector<ErrorStats> evaluate(const std::vector<PredictionRecord>& records, Grouping grouping, bool smoothed = true);

std::string format_table(const std::vector<ErrorStats>& stats);
void write_eval_csv(const std::vector<ErrorStats>& stats, const std::string& path);

}  // namespace e2srs::xapp
