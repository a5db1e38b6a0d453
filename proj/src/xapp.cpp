// Copyright 2026 The e2srs Authors
// SPDX-License-Identifier: Apache-2.0

#include "e2srs/xapp.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "e2srs/dataset.hpp"
#include "e2srs/error.hpp"
#include "e2srs/log.hpp"
#include "e2srs/synth.hpp"

namespace e2srs::xapp {

using namespace std::chrono_literals;
using namespace e2srs::cc;

double PredictionRecord::error_m() const {
  if (!ground_truth) return std::nan("");
  return std::hypot(smooth[0] - (*ground_truth)[0], smooth[1] - (*ground_truth)[1]);
}

Vec2 moving_average(std::span<const Vec2> history, std::size_t window) {
  require(!history.empty() && window >= 1, Errc::invalid_argument, "moving average needs history and W >= 1");
  const std::size_t n = std::min(window, history.size());
  Vec2 s{0.0, 0.0};
  for (std::size_t i = history.size() - n; i < history.size(); ++i) {
    s[0] += history[i][0];
    s[1] += history[i][1];
  }
  return {s[0] / static_cast<double>(n), s[1] / static_cast<double>(n)};
}

SnapshotInput from_indication(const wire::RicIndication& ind) {
  SnapshotInput in;
  in.sequence = ind.sequence;
  in.timestamp_ns = ind.srs.timestamp_ns;
  in.ue_id = ind.srs.ue_id;
  in.n_fft = ind.srs.n_fft();
  in.cfr.reserve(ind.srs.trp_count() * in.n_fft);
  for (const auto& ru : ind.srs.rus) {
    in.trps_per_ru.push_back(ru.trps.size());
    for (const auto& t : ru.trps) in.cfr.insert(in.cfr.end(), t.cfr.begin(), t.cfr.end());
  }
  return in;
}

StreamingLocalizer::StreamingLocalizer(ModelParams model, Geometry geometry, PreprocessConfig cfg, std::size_t window)
    : model_(std::move(model)), geometry_(std::move(geometry)), cfg_(cfg), window_(window) {
  require(window_ >= 1, Errc::config_error, "moving-average window must be >= 1");
  require(model_.rows == geometry_.trp_count(), Errc::model_mismatch,
          fmt::format("model expects M = {}, geometry has {} TRPs", model_.rows, geometry_.trp_count()));
  require(model_.taps == cfg_.taps, Errc::manifest_mismatch,
          fmt::format("model trained for C = {}, pipeline configured for C = {}", model_.taps, cfg_.taps));
}

std::vector<PredictionRecord> StreamingLocalizer::push(SnapshotInput in) {
  const auto blocks = geometry_.trps_per_ru();
  require(in.trps_per_ru == blocks, Errc::model_mismatch,
          fmt::format("indication carries {} TRPs in {} RUs, model/geometry expect {} in {}",
                      in.cfr.size() / std::max<std::size_t>(1, in.n_fft), in.trps_per_ru.size(), model_.rows,
                      blocks.size()));
  require(in.n_fft >= cfg_.taps && std::has_single_bit(in.n_fft) && in.cfr.size() == model_.rows * in.n_fft,
          Errc::model_mismatch, fmt::format("indication N_fft = {} is incompatible with C = {}", in.n_fft, cfg_.taps));
  const auto t0 = std::chrono::steady_clock::now();
  Pending p;
  p.features = extract_features(in.cfr, geometry_, in.n_fft, cfg_);
  if (p.features.usable) p.raw = forward(model_, normalize(p.features, model_.rows, model_.alpha, model_.taps));
  p.process_us = std::max(1e-3, std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - t0).count());
  auto& ue = ues_[in.ue_id];
  ue.peaks.push_back(p.features.ref_peaks);
  ue.seen++;
  in.cfr.clear();
  in.cfr.shrink_to_fit();
  p.meta = std::move(in);
  p.features.magnitudes.clear();
  ue.pending.push_back(std::move(p));
  return drain(ue, false);
}

std::vector<PredictionRecord> StreamingLocalizer::flush() {
  std::vector<PredictionRecord> out;
  for (auto& [id, ue] : ues_) {
    auto r = drain(ue, true);
    out.insert(out.end(), r.begin(), r.end());
  }
  return out;
}

std::vector<PredictionRecord> StreamingLocalizer::drain(UeState& ue, bool final) {
  const std::size_t half = cfg_.outlier_window / 2;
  std::vector<PredictionRecord> out;
  while (!ue.pending.empty()) {
    const std::size_t ahead = ue.peaks.size() - ue.history - 1;
    // The sequence-level rule applies once at least five snapshots exist.
    if (!final && (ahead < half || ue.seen < 5)) break;
    bool outlier = false;
    if (ue.seen >= 5) {
      const std::vector<std::vector<std::size_t>> local(ue.peaks.begin(), ue.peaks.end());
      outlier = is_outlier(local, ue.history, cfg_);
    }
    if (auto r = emit(ue, ue.pending.front(), outlier)) out.push_back(*r);
    ue.pending.pop_front();
    ue.history++;
    while (ue.history > half) {
      ue.peaks.pop_front();
      ue.history--;
    }
  }
  return out;
}

std::optional<PredictionRecord> StreamingLocalizer::emit(UeState& ue, Pending& p, bool outlier) {
  if (outlier) {
    ++outliers_;
    log::debug("xapp", "event=outlier_drop sequence={}", p.meta.sequence);
    return std::nullopt;
  }
  if (!p.features.usable) {
    ++no_peak_;
    log::debug("xapp", "event=no_peak_drop sequence={}", p.meta.sequence);
    return std::nullopt;
  }
  PredictionRecord r;
  r.sequence = p.meta.sequence;
  r.timestamp_ns = p.meta.timestamp_ns;
  r.ue_id = p.meta.ue_id;
  r.raw = p.raw;
  ue.raw.push_back(r.raw);
  if (ue.raw.size() > window_) ue.raw.pop_front();
  const std::vector<Vec2> hist(ue.raw.begin(), ue.raw.end());
  r.smooth = moving_average(hist, window_);
  r.ground_truth = p.meta.ground_truth;
  r.latency_us = p.process_us;
  return r;
}

std::string format_record(const PredictionRecord& r) {
  std::string gt = ",,";
  if (r.ground_truth) gt = fmt::format("{},{},{}", fmt::format("{:.17g}", (*r.ground_truth)[0]),
                                       fmt::format("{:.17g}", (*r.ground_truth)[1]), fmt::format("{:.17g}", r.error_m()));
  return fmt::format("{},{},{:.17g},{:.17g},{:.17g},{:.17g},{},{:.17g}", r.timestamp_ns, r.ue_id, r.raw[0], r.raw[1],
                     r.smooth[0], r.smooth[1], gt, r.latency_us);
}

PredictionWriter::PredictionWriter(const std::string& path) {
  f_ = std::fopen(path.c_str(), "wb");
  require(f_ != nullptr, Errc::io_error, "cannot write " + path);
  std::fprintf(f_, "%s\n", kPredictionHeader);
}

PredictionWriter::~PredictionWriter() { close(); }

void PredictionWriter::write(const PredictionRecord& r) {
  const auto line = format_record(r);
  std::fprintf(f_, "%s\n", line.c_str());
  std::fflush(f_);
}

void PredictionWriter::close() {
  if (f_) std::fclose(f_);
  f_ = nullptr;
}

std::vector<PredictionRecord> read_predictions(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), Errc::io_error, "cannot open " + path);
  std::string line;
  std::getline(in, line);
  require(line == kPredictionHeader, Errc::io_error, path + " is not a prediction CSV");
  std::vector<PredictionRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    require(f.size() == 10, Errc::io_error, "malformed prediction row: " + line);
    try {
      PredictionRecord r;
      r.sequence = out.size();
      r.timestamp_ns = std::stoull(f[0]);
      r.ue_id = static_cast<std::uint32_t>(std::stoul(f[1]));
      r.raw = {std::stod(f[2]), std::stod(f[3])};
      r.smooth = {std::stod(f[4]), std::stod(f[5])};
      if (!f[6].empty()) r.ground_truth = Vec2{std::stod(f[6]), std::stod(f[7])};
      r.latency_us = std::stod(f[9]);
      out.push_back(r);
    } catch (const std::logic_error&) {
      fail(Errc::io_error, "malformed prediction row: " + line);
    }
  }
  return out;
}

StreamingLocalizer make_localizer(const PipelineConfig& cfg) {
  auto model = load_params(cfg.model_path, cfg.preprocess.taps);
  return StreamingLocalizer(std::move(model), Geometry::load(cfg.geometry), cfg.preprocess, cfg.window);
}

namespace {

struct Emitter {
  const RecordSink& sink;
  PredictionWriter* writer;
  PipelineSummary& sum;

  void operator()(const std::vector<PredictionRecord>& rs) {
    for (const auto& r : rs) {
      if (writer) writer->write(r);
      if (sink) sink(r);
      sum.records++;
      sum.max_latency_us = std::max(sum.max_latency_us, r.latency_us);
    }
  }
};

}  // namespace

PipelineSummary run_pipeline(const PipelineConfig& cfg, const std::atomic<bool>* stop, const RecordSink& sink) {
  auto loc = make_localizer(cfg);
  std::unique_ptr<DatasetReader> truth;
  if (!cfg.truth_dataset.empty()) truth = std::make_unique<DatasetReader>(cfg.truth_dataset);
  std::unique_ptr<PredictionWriter> writer;
  if (!cfg.out_csv.empty()) writer = std::make_unique<PredictionWriter>(cfg.out_csv);
  PipelineSummary sum;
  Emitter emit{sink, writer.get(), sum};

  net::MessageStream stream(net::connect(cfg.ric));
  stream.send(wire::SubscriptionRequest{cfg.request_id, wire::kSrsPositioningFunction, wire::kTriggerOnSrsIndication});
  std::deque<wire::RicIndication> early;
  for (;;) {
    auto msg = stream.receive(5s);
    require(msg.has_value(), Errc::connection_lost, "no subscription response from RIC");
    if (auto* ind = std::get_if<wire::RicIndication>(&*msg)) {
      early.push_back(std::move(*ind));
      continue;
    }
    if (auto* resp = std::get_if<wire::SubscriptionResponse>(&*msg)) {
      if (resp->request_id != cfg.request_id) continue;
      require(resp->status == wire::SubscriptionStatus::accepted, Errc::subscription_rejected,
              fmt::format("RIC answered status {}", static_cast<int>(resp->status)));
      break;
    }
  }
  log::info("xapp", "event=subscribed request_id={}", cfg.request_id);

  auto handle = [&](const wire::RicIndication& ind) {
    if (ind.request_id != cfg.request_id) return;
    auto in = from_indication(ind);
    if (truth) {
      auto s = truth->read(ind.sequence % truth->size());
      if (s.has_ground_truth()) in.ground_truth = Vec2{s.ground_truth[0], s.ground_truth[1]};
    }
    sum.indications++;
    emit(loc.push(std::move(in)));
  };

  std::optional<Error> lost;
  auto last = std::chrono::steady_clock::now();
  try {
    while (!early.empty()) {
      handle(early.front());
      early.pop_front();
    }
    while (!(stop && stop->load()) && (cfg.max_records == 0 || sum.indications < cfg.max_records)) {
      auto msg = stream.receive(50ms);
      const auto now = std::chrono::steady_clock::now();
      if (!msg) {
        if (cfg.idle_timeout_s > 0 && now - last > std::chrono::duration<double>(cfg.idle_timeout_s)) break;
        continue;
      }
      last = now;
      if (auto* ind = std::get_if<wire::RicIndication>(&*msg)) handle(*ind);
    }
  } catch (const Error& e) {
    if (e.code() != Errc::connection_lost) throw;
    lost = e;
  }
  emit(loc.flush());
  sum.outliers = loc.outliers();
  sum.no_peak = loc.no_peak();
  if (writer) writer->close();
  log::info("xapp", "event=done indications={} records={} outliers={} no_peak={} max_latency_us={:.1f}",
            sum.indications, sum.records, sum.outliers, sum.no_peak, sum.max_latency_us);
  if (lost) throw *lost;
  return sum;
}

PipelineSummary infer_offline(const PipelineConfig& cfg, const std::string& dataset_path, const RecordSink& sink) {
  auto loc = make_localizer(cfg);
  DatasetReader d(dataset_path);
  std::unique_ptr<PredictionWriter> writer;
  if (!cfg.out_csv.empty()) writer = std::make_unique<PredictionWriter>(cfg.out_csv);
  PipelineSummary sum;
  Emitter emit{sink, writer.get(), sum};
  const auto& h = d.header();
  for (std::size_t i = 0; i < d.size(); ++i) {
    auto s = d.read(i);
    SnapshotInput in;
    in.sequence = i;
    in.timestamp_ns = s.timestamp_ns;
    in.ue_id = 1;
    in.trps_per_ru.assign(h.trps_per_ru.begin(), h.trps_per_ru.end());
    in.n_fft = h.n_fft;
    in.cfr = std::move(s.cfr);
    if (s.has_ground_truth()) in.ground_truth = Vec2{s.ground_truth[0], s.ground_truth[1]};
    sum.indications++;
    emit(loc.push(std::move(in)));
  }
  emit(loc.flush());
  sum.outliers = loc.outliers();
  sum.no_peak = loc.no_peak();
  return sum;
}

double percentile(std::vector<double> values, double p) {
  require(!values.empty(), Errc::empty_set, "percentile of an empty set");
  std::sort(values.begin(), values.end());
  const double rank = static_cast<double>(values.size() - 1) * p / 100.0;
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const std::size_t hi = std::min(values.size() - 1, lo + 1);
  const double frac = rank - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

namespace {

std::string group_name(const Vec2& gt) {
  for (const auto& tp : synth::default_test_points())
    if (std::abs(tp.position[0] - gt[0]) < 1e-6 && std::abs(tp.position[1] - gt[1]) < 1e-6) return tp.label;
  return fmt::format("{:.2f}_{:.2f}", gt[0], gt[1]);
}

ErrorStats stats_of(const std::string& name, const std::vector<double>& e) {
  ErrorStats s;
  s.group = name;
  s.n = e.size();
  s.p10 = percentile(e, 10);
  s.p50 = percentile(e, 50);
  s.p90 = percentile(e, 90);
  double sum = 0.0;
  for (double v : e) sum += v;
  s.mean = sum / static_cast<double>(e.size());
  return s;
}

}  // namespace

std::vector<ErrorStats> evaluate(const std::vector<PredictionRecord>& records, Grouping grouping, bool smoothed) {
  std::map<std::string, std::vector<double>> groups;
  std::vector<double> all;
  for (const auto& r : records) {
    if (!r.ground_truth) continue;
    const Vec2& z = smoothed ? r.smooth : r.raw;
    const double e = std::hypot(z[0] - (*r.ground_truth)[0], z[1] - (*r.ground_truth)[1]);
    all.push_back(e);
    if (grouping == Grouping::point) groups[group_name(*r.ground_truth)].push_back(e);
  }
  require(!all.empty(), Errc::no_ground_truth, "no prediction carries ground truth");
  std::vector<ErrorStats> out;
  for (const auto& [name, e] : groups) out.push_back(stats_of(name, e));
  out.push_back(stats_of("all", all));
  return out;
}

std::string format_table(const std::vector<ErrorStats>& stats) {
  std::string s = fmt::format("{:<12} {:>7} {:>9} {:>9} {:>9} {:>9}\n", "group", "n", "p10_m", "p50_m", "p90_m", "mean_m");
  for (const auto& g : stats)
    s += fmt::format("{:<12} {:>7} {:>9.3f} {:>9.3f} {:>9.3f} {:>9.3f}\n", g.group, g.n, g.p10, g.p50, g.p90, g.mean);
  return s;
}

void write_eval_csv(const std::vector<ErrorStats>& stats, const std::string& path) {
  std::unique_ptr<FILE, int (*)(FILE*)> f(std::fopen(path.c_str(), "wb"), &std::fclose);
  require(f != nullptr, Errc::io_error, "cannot write " + path);
  std::fputs("group,n,p10,p50,p90,mean\n", f.get());
  for (const auto& g : stats)
    std::fprintf(f.get(), "%s,%zu,%.17g,%.17g,%.17g,%.17g\n", g.group.c_str(), g.n, g.p10, g.p50, g.p90, g.mean);
}

}  // namespace e2srs::xapp
