// Copyright 2026 The e2srs Authors
// SPDX-License-Identifier: Apache-2.0

#include "gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace e2srs::testing {

SmallInstance small_instance(std::uint64_t seed) {
  SmallInstance inst;
  inst.geometry = Geometry::parse("1 1 0 0 0 ref\n1 2 20 2 1\n");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  auto& set = inst.set;
  set.rows = 2;
  set.taps = 8;
  set.alpha = 1.0;
  for (std::size_t i = 0; i < 6; ++i) {
    cc::TrainingSample s;
    s.index = i;
    s.timestamp_ns = i * 100'000'000ull;
    s.ground_truth = {50.0 * u01(rng), 20.0 * u01(rng), 0.0};
    s.input.resize(16);
    for (auto& v : s.input) v = u01(rng);
    s.tdoa_s = {0.0, (40.0 * u01(rng) - 20.0) / kSpeedOfLight};
    s.mask = {0, static_cast<std::uint8_t>(i % 3 != 2)};
    set.samples.push_back(std::move(s));
  }

  inst.cfg.architecture = kSmallArchitecture;
  inst.cfg.beta = 0.5 + u01(rng);
  inst.params = cc::ModelParams::build(2, 8, kSmallArchitecture);
  inst.params.init(seed);
  // Nonzero biases so every parameter has a generic gradient.
  for (const auto& l : inst.params.layers)
    for (std::size_t b = 0; b < l.b_size; ++b) inst.params.theta[l.b_off + b] = 0.2 * (u01(rng) - 0.5);
  cc::set_output_map(inst.params, inst.geometry);

  const std::pair<std::size_t, std::size_t> pairs[] = {{0, 1}, {1, 3}, {2, 5}, {0, 4}};
  for (auto [i, j] : pairs) inst.batch.push_back({i, j, 5.0 * u01(rng)});
  return inst;
}

GradCheckResult gradient_check(const SmallInstance& inst, double h, double floor) {
  std::vector<double> grad;
  cc::loss_and_gradient(inst.batch, inst.set, inst.params, inst.cfg, inst.geometry, grad);
  GradCheckResult res;
  res.parameters = grad.size();
  auto p = inst.params;
  for (std::size_t k = 0; k < grad.size(); ++k) {
    const double orig = p.theta[k];
    p.theta[k] = orig + h;
    const double up = cc::total_loss(inst.batch, inst.set, p, inst.cfg, inst.geometry).total;
    p.theta[k] = orig - h;
    const double down = cc::total_loss(inst.batch, inst.set, p, inst.cfg, inst.geometry).total;
    p.theta[k] = orig;
    const double numeric = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(grad[k]), std::abs(numeric), floor});
    res.max_rel_error = std::max(res.max_rel_error, std::abs(grad[k] - numeric) / denom);
  }
  return res;
}

}  // namespace e2srs::testing
