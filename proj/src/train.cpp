// Copyright 2026 The e2srs Authors
// SPDX-License-Identifier: Apache-2.0

#include "e2srs/train.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <thread>
#include <unordered_set>

#include "e2srs/config.hpp"
#include "e2srs/dataset.hpp"
#include "e2srs/error.hpp"

namespace e2srs::cc {
namespace {

// Gradient partials are always accumulated in this many chunks, then summed in order.
constexpr std::size_t kChunks = 8;

double tdoa_norm(const Geometry& g) {
  const auto n = static_cast<double>(g.tdoa_count());
  return n > 0 ? 2.0 * n : 1.0;
}

struct ChunkResult {
  double tdoa = 0.0;
  double disp = 0.0;
  std::size_t masked = 0;
  std::vector<double> grad;
};

void run_chunk(std::span<const PairSample> batch, const TrainingSet& set, const ModelParams& p, const TrainConfig& cfg,
               const Geometry& g, double tdoa_scale, double disp_scale, bool want_grad, ChunkResult& out) {
  ForwardCache ci, cj;
  if (want_grad) out.grad.assign(p.theta.size(), 0.0);
  for (const auto& pr : batch) {
    const auto& a = set.samples[pr.i];
    const auto& b = set.samples[pr.j];
    const Vec2 zi = forward(p, a.input, ci);
    const Vec2 zj = forward(p, b.input, cj);
    Vec2 gi{0.0, 0.0}, gj{0.0, 0.0};
    out.tdoa += tdoa_sample_loss(zi, a.tdoa_s, a.mask, g, cfg.speed_of_light, cfg.ue_height_m, &gi);
    out.tdoa += tdoa_sample_loss(zj, b.tdoa_s, b.mask, g, cfg.speed_of_light, cfg.ue_height_m, &gj);
    for (std::size_t r = 0; r < g.trp_count(); ++r) {
      if (g.is_ref_row(r)) continue;
      out.masked += !a.mask[r];
      out.masked += !b.mask[r];
    }
    Vec2 di{0.0, 0.0}, dj{0.0, 0.0};
    out.disp += displacement_pair_loss(zi, zj, pr.displacement_m, &di, &dj);
    if (!want_grad) continue;
    const double wd = cfg.beta * disp_scale;
    const Vec2 dzi{tdoa_scale * gi[0] + wd * di[0], tdoa_scale * gi[1] + wd * di[1]};
    const Vec2 dzj{tdoa_scale * gj[0] + wd * dj[0], tdoa_scale * gj[1] + wd * dj[1]};
    backward(p, ci, dzi, out.grad);
    backward(p, cj, dzj, out.grad);
  }
}

LossBreakdown evaluate(std::span<const PairSample> batch, const TrainingSet& set, const ModelParams& p,
                       const TrainConfig& cfg, const Geometry& g, std::vector<double>* grad) {
  require(!batch.empty(), Errc::empty_batch, "loss needs at least one pair");
  require(set.rows == p.rows && set.taps == p.taps, Errc::dimension_mismatch, "training set does not match model");
  const double n = static_cast<double>(batch.size());
  const double tdoa_scale = 1.0 / (n * tdoa_norm(g));
  const double disp_scale = 1.0 / n;

  std::vector<ChunkResult> parts(kChunks);
  const std::size_t per = (batch.size() + kChunks - 1) / kChunks;
  auto work = [&](std::size_t c) {
    const std::size_t lo = std::min(batch.size(), c * per);
    const std::size_t hi = std::min(batch.size(), lo + per);
    run_chunk(batch.subspan(lo, hi - lo), set, p, cfg, g, tdoa_scale, disp_scale, grad != nullptr, parts[c]);
  };
  const std::size_t threads = std::clamp<std::size_t>(cfg.threads, 1, kChunks);
  if (threads == 1) {
    for (std::size_t c = 0; c < kChunks; ++c) work(c);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        for (std::size_t c = t; c < kChunks; c += threads) work(c);
      });
    for (auto& th : pool) th.join();
  }

  LossBreakdown out;
  out.pairs = batch.size();
  double tdoa_sum = 0.0, disp_sum = 0.0;
  for (const auto& part : parts) {
    tdoa_sum += part.tdoa;
    disp_sum += part.disp;
    out.masked_out += part.masked;
  }
  out.tdoa = tdoa_sum * tdoa_scale;
  out.displacement = disp_sum * disp_scale;
  out.total = out.tdoa + cfg.beta * out.displacement;
  if (grad) {
    grad->assign(p.theta.size(), 0.0);
    for (const auto& part : parts)
      for (std::size_t i = 0; i < grad->size(); ++i) (*grad)[i] += part.grad[i];
  }
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  require(beta >= 0.0 && std::isfinite(beta), Errc::config_error, "beta must be >= 0");
  require(epsilon_s > 0.0, Errc::config_error, "epsilon must be > 0");
  require(learning_rate >= 0.0, Errc::config_error, "learning rate must be >= 0");
  require(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0 && adam_eps > 0.0,
          Errc::config_error, "invalid Adam moments");
  require(batch >= 1, Errc::config_error, "batch must be >= 1");
  require(pairs_per_epoch >= 1, Errc::config_error, "pairs_per_epoch must be >= 1");
  require(speed_of_light > 0.0, Errc::config_error, "speed of light must be > 0");
  require(displacement_noise_m >= 0.0, Errc::config_error, "displacement noise must be >= 0");
  require(threads >= 1, Errc::config_error, "threads must be >= 1");
}

TrainConfig train_config_from(const ConfigFile& cfg) {
  TrainConfig t;
  SectionReader r(cfg, "train");
  t.beta = r.get("beta", t.beta);
  t.epsilon_s = r.get("epsilon_s", t.epsilon_s);
  t.learning_rate = r.get("learning_rate", t.learning_rate);
  t.adam_beta1 = r.get("adam_beta1", t.adam_beta1);
  t.adam_beta2 = r.get("adam_beta2", t.adam_beta2);
  t.adam_eps = r.get("adam_eps", t.adam_eps);
  t.batch = static_cast<std::size_t>(r.get_int("batch", static_cast<long long>(t.batch)));
  t.epochs = static_cast<std::size_t>(r.get_int("epochs", static_cast<long long>(t.epochs)));
  t.pairs_per_epoch = static_cast<std::size_t>(r.get_int("pairs_per_epoch", static_cast<long long>(t.pairs_per_epoch)));
  t.seed = static_cast<std::uint64_t>(r.get_int("seed", static_cast<long long>(t.seed)));
  t.speed_of_light = r.get("speed_of_light", t.speed_of_light);
  t.ue_height_m = r.get("ue_height_m", t.ue_height_m);
  t.displacement_noise_m = r.get("displacement_noise_m", t.displacement_noise_m);
  t.probe_pairs = static_cast<std::size_t>(r.get_int("probe_pairs", static_cast<long long>(t.probe_pairs)));
  t.threads = static_cast<std::size_t>(r.get_int("threads", static_cast<long long>(t.threads)));
  t.architecture = r.get_str("architecture", t.architecture);
  r.finish();
  t.validate();
  return t;
}

TrainingSet build_training_set(const std::string& dataset_path, const Geometry& g, const PreprocessConfig& cfg_in) {
  DatasetReader reader(dataset_path);
  const auto& h = reader.header();
  require(h.matches(g), Errc::model_mismatch, "dataset TRP layout does not match geometry");
  require(h.flags & kHasGroundTruth, Errc::no_ground_truth, "training needs ground truth for displacement");
  PreprocessConfig cfg = cfg_in;
  cfg.subcarrier_spacing_hz = h.subcarrier_spacing_hz;
  require(cfg.taps <= h.n_fft, Errc::dimension_mismatch, "C exceeds n_fft");

  std::vector<Features> feats;
  std::vector<std::vector<std::size_t>> peaks;
  std::vector<Snapshot> meta;
  feats.reserve(reader.size());
  for (std::size_t i = 0; i < reader.size(); ++i) {
    auto s = reader.read(i);
    feats.push_back(extract_features(s.cfr, g, h.n_fft, cfg));
    peaks.push_back(feats.back().ref_peaks);
    s.cfr.clear();
    s.cfr.shrink_to_fit();
    meta.push_back(std::move(s));
  }

  TrainingSet set;
  set.rows = g.trp_count();
  set.taps = cfg.taps;
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < feats.size(); ++i) {
    if (peaks.size() >= 5 && is_outlier(peaks, i, cfg)) {
      ++set.outliers;
      continue;
    }
    if (!feats[i].usable) {
      ++set.no_peak;
      continue;
    }
    keep.push_back(i);
  }
  require(!keep.empty(), Errc::empty_set, "no usable snapshots in " + dataset_path);
  double alpha = 0.0;
  for (auto i : keep)
    for (double v : feats[i].magnitudes) alpha = std::max(alpha, v);
  require(alpha > 0.0, Errc::all_zero, "training set is all zero");
  set.alpha = alpha;
  for (auto i : keep) {
    TrainingSample t;
    t.index = i;
    t.timestamp_ns = meta[i].timestamp_ns;
    t.ground_truth = meta[i].ground_truth;
    t.input = normalize(feats[i], set.rows, alpha, set.taps).values;
    t.tdoa_s = std::move(feats[i].tdoa.seconds);
    t.mask = std::move(feats[i].mask);
    set.samples.push_back(std::move(t));
  }
  return set;
}

double tdoa_sample_loss(const Vec2& z, std::span<const double> tdoa_s, std::span<const std::uint8_t> mask,
                        const Geometry& g, double c, double ue_height, Vec2* dz) {
  const Vec3 p{z[0], z[1], ue_height};
  double loss = 0.0;
  for (std::size_t r = 0; r < g.trp_count(); ++r) {
    if (g.is_ref_row(r) || !mask[r]) continue;
    const Vec3& xm = g.position(r);
    const Vec3& xr = g.position(g.ref_row(g.ru_of_row(r)));
    const double dm = distance(p, xm);
    const double dr = distance(p, xr);
    const double res = (dm - dr) - c * tdoa_s[r];
    loss += res * res;
    if (dz) {
      for (int a = 0; a < 2; ++a) {
        const double um = dm > 0.0 ? (p[a] - xm[a]) / dm : 0.0;
        const double ur = dr > 0.0 ? (p[a] - xr[a]) / dr : 0.0;
        (*dz)[a] += 2.0 * res * (um - ur);
      }
    }
  }
  return loss;
}

double tdoa_pair_loss(const Vec2& zi, const Vec2& zj, std::span<const double> tdoa_i, std::span<const double> tdoa_j,
                      std::span<const std::uint8_t> mask_i, std::span<const std::uint8_t> mask_j, const Geometry& g,
                      double c, double ue_height) {
  return tdoa_sample_loss(zi, tdoa_i, mask_i, g, c, ue_height) + tdoa_sample_loss(zj, tdoa_j, mask_j, g, c, ue_height);
}

double displacement_pair_loss(const Vec2& zi, const Vec2& zj, double d, Vec2* dzi, Vec2* dzj) {
  const double dx = zi[0] - zj[0];
  const double dy = zi[1] - zj[1];
  const double dist = std::hypot(dx, dy);
  const double res = dist - d;
  if (dist > 0.0) {
    const double k = 2.0 * res / dist;
    if (dzi) {
      (*dzi)[0] += k * dx;
      (*dzi)[1] += k * dy;
    }
    if (dzj) {
      (*dzj)[0] -= k * dx;
      (*dzj)[1] -= k * dy;
    }
  }
  return res * res;
}

LossBreakdown total_loss(std::span<const PairSample> batch, const TrainingSet& set, const ModelParams& p,
                         const TrainConfig& cfg, const Geometry& g) {
  return evaluate(batch, set, p, cfg, g, nullptr);
}

LossBreakdown loss_and_gradient(std::span<const PairSample> batch, const TrainingSet& set, const ModelParams& p,
                                const TrainConfig& cfg, const Geometry& g, std::vector<double>& grad) {
  return evaluate(batch, set, p, cfg, g, &grad);
}

std::vector<PairSample> valid_pairs(const TrainingSet& set, const TrainConfig& cfg, std::mt19937_64& rng) {
  const auto eps_ns = static_cast<double>(cfg.epsilon_s) * 1e9;
  std::normal_distribution<double> noise(0.0, cfg.displacement_noise_m);
  std::vector<PairSample> out;
  const auto& s = set.samples;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = i + 1; j < s.size(); ++j) {
      if (static_cast<double>(s[j].timestamp_ns - s[i].timestamp_ns) > eps_ns) break;
      const Vec3& a = s[i].ground_truth;
      const Vec3& b = s[j].ground_truth;
      double d = std::hypot(a[0] - b[0], a[1] - b[1]);
      if (cfg.displacement_noise_m > 0.0) d = std::max(0.0, d + noise(rng));
      out.push_back({i, j, d});
    }
  }
  return out;
}

std::vector<PairSample> sample_pairs(std::span<const PairSample> pool, std::size_t count, std::mt19937_64& rng) {
  require(!pool.empty(), Errc::no_valid_pairs, "no snapshot pair lies within the epsilon window");
  count = std::min(count, pool.size());
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  std::unordered_set<std::size_t> seen;
  std::vector<PairSample> out;
  out.reserve(count);
  while (out.size() < count) {
    const std::size_t k = pick(rng);
    if (seen.insert(k).second) out.push_back(pool[k]);
  }
  return out;
}

void Adam::update(std::vector<double>& theta, std::span<const double> grad, const TrainConfig& cfg) {
  if (m.size() != theta.size()) {
    m.assign(theta.size(), 0.0);
    v.assign(theta.size(), 0.0);
  }
  ++step;
  const double b1 = cfg.adam_beta1;
  const double b2 = cfg.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step));
  for (std::size_t i = 0; i < theta.size(); ++i) {
    m[i] = b1 * m[i] + (1.0 - b1) * grad[i];
    v[i] = b2 * v[i] + (1.0 - b2) * grad[i] * grad[i];
    theta[i] -= cfg.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg.adam_eps);
  }
}

TrainResult train(const TrainingSet& set, const Geometry& g, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  TrainResult res;
  res.params = ModelParams::build(set.rows, set.taps, cfg.architecture);
  res.params.init(cfg.seed);
  res.params.alpha = set.alpha;
  set_output_map(res.params, g);

  const auto pool = valid_pairs(set, cfg, rng);
  const auto probe = sample_pairs(pool, cfg.probe_pairs, rng);

  EpochLog first;
  first.probe = total_loss(probe, set, res.params, cfg, g);
  first.train_mean = first.probe.total;
  res.log.push_back(first);
  if (on_epoch) on_epoch(first);

  Adam adam;
  std::vector<double> grad;
  const std::size_t steps = std::max<std::size_t>(1, (cfg.pairs_per_epoch + cfg.batch - 1) / cfg.batch);
  for (std::size_t e = 1; e <= cfg.epochs; ++e) {
    double sum = 0.0;
    for (std::size_t s = 0; s < steps; ++s) {
      const auto batch = sample_pairs(pool, cfg.batch, rng);
      sum += loss_and_gradient(batch, set, res.params, cfg, g, grad).total;
      adam.update(res.params.theta, grad, cfg);
    }
    EpochLog log;
    log.epoch = e;
    log.train_mean = sum / static_cast<double>(steps);
    log.probe = total_loss(probe, set, res.params, cfg, g);
    res.log.push_back(log);
    if (on_epoch) on_epoch(log);
  }
  return res;
}

void write_loss_log(const std::vector<EpochLog>& log, const std::string& path) {
  std::unique_ptr<FILE, int (*)(FILE*)> f(std::fopen(path.c_str(), "wb"), &std::fclose);
  require(f != nullptr, Errc::io_error, "cannot write " + path);
  std::fputs("epoch,train_mean,total,tdoa,displacement,pairs,masked_out\n", f.get());
  for (const auto& l : log)
    std::fprintf(f.get(), "%zu,%.17g,%.17g,%.17g,%.17g,%zu,%zu\n", l.epoch, l.train_mean, l.probe.total,
                 l.probe.tdoa, l.probe.displacement, l.probe.pairs, l.probe.masked_out);
}

}  // namespace e2srs::cc
