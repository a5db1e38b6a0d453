// Copyright 2026 The e2srs Authors
// SPDX-License-Identifier: Apache-2.0

// Channel-charting network f: R^{M x C} -> R^2 with manual backpropagation.
//
// Parameters live in one flat vector so the optimizer and gradient checks can
// treat them uniformly; each layer records where its weights and biases start.

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "e2srs/geometry.hpp"
#include "e2srs/preprocess.hpp"

namespace e2srs::cc {

inline constexpr std::uint32_t kWeightMagic = 0x43435731;  // "CCW1"

enum class LayerKind : std::uint8_t { conv1d = 1, tanh = 2, flatten = 3, dense = 4 };

struct Layer {
  LayerKind kind = LayerKind::tanh;
  // conv1d: channels in/out, kernel, stride. dense: in/out features.
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t kernel = 0;
  std::size_t stride = 1;
  // Shapes as (channels, length); filled by ModelParams::build.
  std::size_t in_ch = 0, in_len = 0, out_ch = 0, out_len = 0;
  std::size_t w_off = 0, b_off = 0, w_size = 0, b_size = 0;

  bool operator==(const Layer&) const = default;
};

struct ModelParams {
  std::size_t rows = 0;  // M
  std::size_t taps = 0;  // C
  std::vector<Layer> layers;
  std::vector<double> theta;
  // Fixed (untrained) output map: z = offset + scale * y.
  Vec2 output_offset{0.0, 0.0};
  Vec2 output_scale{1.0, 1.0};
  // Preprocessing state shipped with the weights.
  double alpha = 1.0;

  /// Builds shapes and parameter offsets from `spec`, e.g.
  /// "conv:16:7:2,tanh,conv:32:5:2,tanh,flatten,dense:64,tanh,dense:2".
  /// Throws DIMENSION_MISMATCH if the chain does not end in 2 outputs.
  static ModelParams build(std::size_t rows, std::size_t taps, const std::string& spec);
  std::string architecture() const;

  std::size_t parameter_count() const { return theta.size(); }
  std::size_t max_activation() const;

  /// Xavier-uniform weights, zero biases.
  void init(std::uint64_t seed);

  bool operator==(const ModelParams&) const = default;
};

inline const char* kDefaultArchitecture = "conv:16:7:2,tanh,conv:32:5:2,tanh,flatten,dense:64,tanh,dense:2";

/// Offset at the centroid of TRP x/y positions and scale at half their extent (>= 1 m).
void set_output_map(ModelParams& p, const Geometry& g);

/// Per-sample activations kept for backpropagation.
struct ForwardCache {
  std::vector<std::vector<double>> acts;  // acts[0] = input, acts[l+1] = output of layer l
};

Vec2 forward(const ModelParams& p, const NormalizedCir& input);
Vec2 forward(const ModelParams& p, std::span<const double> input, ForwardCache& cache);

/// Accumulates dL/dtheta into `grad` given dL/dz for the sample cached in `cache`.
void backward(const ModelParams& p, const ForwardCache& cache, const Vec2& dz, std::span<double> grad);

void save_params(const ModelParams& p, const std::string& path);
/// `expected_taps` > 0 makes a disagreeing C a MANIFEST_MISMATCH.
ModelParams load_params(const std::string& path, std::size_t expected_taps = 0);

}  // namespace e2srs::cc
