// Copyright 2026 The e2srs Authors
// SPDX-License-Identifier: Apache-2.0

#include "e2srs/model.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "e2srs/bytes.hpp"
#include "e2srs/error.hpp"

namespace e2srs::cc {
namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    auto b = cur.find_first_not_of(' ');
    auto e = cur.find_last_not_of(' ');
    out.push_back(b == std::string::npos ? "" : cur.substr(b, e - b + 1));
  }
  return out;
}

std::size_t to_size(const std::string& s) {
  try {
    std::size_t pos = 0;
    auto v = std::stoul(s, &pos);
    require(pos == s.size(), Errc::invalid_argument, "");
    return v;
  } catch (const std::exception&) {
    fail(Errc::config_error, "bad number '" + s + "' in architecture");
  }
}

void shape_layers(ModelParams& p) {
  std::size_t ch = p.rows;
  std::size_t len = p.taps;
  std::size_t off = 0;
  for (auto& l : p.layers) {
    l.in_ch = ch;
    l.in_len = len;
    switch (l.kind) {
      case LayerKind::conv1d:
        require(l.in == ch, Errc::dimension_mismatch, fmt::format("conv expects {} channels, got {}", l.in, ch));
        require(l.kernel >= 1 && l.stride >= 1 && len >= l.kernel, Errc::dimension_mismatch,
                fmt::format("conv kernel {} does not fit length {}", l.kernel, len));
        l.out_ch = l.out;
        l.out_len = (len - l.kernel) / l.stride + 1;
        l.w_size = l.out * l.in * l.kernel;
        l.b_size = l.out;
        break;
      case LayerKind::dense:
        require(len == 1 && l.in == ch, Errc::dimension_mismatch,
                fmt::format("dense expects {} flat inputs, got {} x {}", l.in, ch, len));
        l.out_ch = l.out;
        l.out_len = 1;
        l.w_size = l.out * l.in;
        l.b_size = l.out;
        break;
      case LayerKind::flatten:
        l.out_ch = ch * len;
        l.out_len = 1;
        l.w_size = l.b_size = 0;
        break;
      case LayerKind::tanh:
        l.out_ch = ch;
        l.out_len = len;
        l.w_size = l.b_size = 0;
        break;
    }
    l.w_off = off;
    off += l.w_size;
    l.b_off = off;
    off += l.b_size;
    ch = l.out_ch;
    len = l.out_len;
  }
  require(ch == 2 && len == 1, Errc::dimension_mismatch, "network must end with 2 outputs");
  p.theta.assign(off, 0.0);
}

}  // namespace

ModelParams ModelParams::build(std::size_t rows, std::size_t taps, const std::string& spec) {
  require(rows >= 1 && taps >= 1, Errc::dimension_mismatch, "empty model input");
  ModelParams p;
  p.rows = rows;
  p.taps = taps;
  std::size_t ch = rows;
  std::size_t len = taps;
  for (const auto& tok : split(spec, ',')) {
    auto parts = split(tok, ':');
    Layer l;
    if (parts[0] == "conv" && parts.size() == 4) {
      l.kind = LayerKind::conv1d;
      l.in = ch;
      l.out = to_size(parts[1]);
      l.kernel = to_size(parts[2]);
      l.stride = to_size(parts[3]);
      ch = l.out;
      len = len >= l.kernel && l.stride ? (len - l.kernel) / l.stride + 1 : 0;
    } else if (parts[0] == "dense" && parts.size() == 2) {
      l.kind = LayerKind::dense;
      l.in = ch * len;
      l.out = to_size(parts[1]);
      ch = l.out;
      len = 1;
    } else if (parts[0] == "tanh" && parts.size() == 1) {
      l.kind = LayerKind::tanh;
    } else if (parts[0] == "flatten" && parts.size() == 1) {
      l.kind = LayerKind::flatten;
      ch *= len;
      len = 1;
    } else {
      fail(Errc::config_error, "unknown layer '" + tok + "'");
    }
    p.layers.push_back(l);
  }
  shape_layers(p);
  return p;
}

std::string ModelParams::architecture() const {
  std::string s;
  for (const auto& l : layers) {
    if (!s.empty()) s += ',';
    switch (l.kind) {
      case LayerKind::conv1d: s += fmt::format("conv:{}:{}:{}", l.out, l.kernel, l.stride); break;
      case LayerKind::dense: s += fmt::format("dense:{}", l.out); break;
      case LayerKind::tanh: s += "tanh"; break;
      case LayerKind::flatten: s += "flatten"; break;
    }
  }
  return s;
}

std::size_t ModelParams::max_activation() const {
  std::size_t m = rows * taps;
  for (const auto& l : layers) m = std::max(m, l.out_ch * l.out_len);
  return m;
}

void ModelParams::init(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::fill(theta.begin(), theta.end(), 0.0);
  for (const auto& l : layers) {
    if (l.w_size == 0) continue;
    const double fan_in = static_cast<double>(l.kind == LayerKind::conv1d ? l.in * l.kernel : l.in);
    const double fan_out = static_cast<double>(l.kind == LayerKind::conv1d ? l.out * l.kernel : l.out);
    const double a = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> u(-a, a);
    for (std::size_t i = 0; i < l.w_size; ++i) theta[l.w_off + i] = u(rng);
  }
}

void set_output_map(ModelParams& p, const Geometry& g) {
  double lo[2] = {1e300, 1e300};
  double hi[2] = {-1e300, -1e300};
  for (std::size_t r = 0; r < g.trp_count(); ++r)
    for (int a = 0; a < 2; ++a) {
      lo[a] = std::min(lo[a], g.position(r)[a]);
      hi[a] = std::max(hi[a], g.position(r)[a]);
    }
  for (int a = 0; a < 2; ++a) {
    p.output_offset[a] = 0.5 * (lo[a] + hi[a]);
    p.output_scale[a] = std::max(1.0, 0.5 * (hi[a] - lo[a]));
  }
}

Vec2 forward(const ModelParams& p, std::span<const double> input, ForwardCache& cache) {
  require(input.size() == p.rows * p.taps, Errc::dimension_mismatch,
          fmt::format("model expects {} x {} input, got {} values", p.rows, p.taps, input.size()));
  cache.acts.resize(p.layers.size() + 1);
  cache.acts[0].assign(input.begin(), input.end());
  const double* th = p.theta.data();
  for (std::size_t li = 0; li < p.layers.size(); ++li) {
    const auto& l = p.layers[li];
    const auto& x = cache.acts[li];
    auto& y = cache.acts[li + 1];
    y.resize(l.out_ch * l.out_len);
    switch (l.kind) {
      case LayerKind::conv1d: {
        const double* w = th + l.w_off;
        const double* b = th + l.b_off;
        for (std::size_t o = 0; o < l.out; ++o) {
          double* yo = y.data() + o * l.out_len;
          std::fill(yo, yo + l.out_len, b[o]);
          for (std::size_t i = 0; i < l.in; ++i) {
            const double* xi = x.data() + i * l.in_len;
            const double* wk = w + (o * l.in + i) * l.kernel;
            for (std::size_t t = 0; t < l.out_len; ++t) {
              const double* xs = xi + t * l.stride;
              double acc = 0.0;
              for (std::size_t k = 0; k < l.kernel; ++k) acc += wk[k] * xs[k];
              yo[t] += acc;
            }
          }
        }
        break;
      }
      case LayerKind::dense: {
        const double* w = th + l.w_off;
        const double* b = th + l.b_off;
        for (std::size_t o = 0; o < l.out; ++o) {
          const double* wo = w + o * l.in;
          double acc = b[o];
          for (std::size_t i = 0; i < l.in; ++i) acc += wo[i] * x[i];
          y[o] = acc;
        }
        break;
      }
      case LayerKind::tanh:
        for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::tanh(x[i]);
        break;
      case LayerKind::flatten:
        y = x;
        break;
    }
  }
  const auto& out = cache.acts.back();
  return {p.output_offset[0] + p.output_scale[0] * out[0], p.output_offset[1] + p.output_scale[1] * out[1]};
}

Vec2 forward(const ModelParams& p, const NormalizedCir& input) {
  require(input.rows == p.rows && input.taps == p.taps, Errc::dimension_mismatch,
          fmt::format("model expects {} x {} input, got {} x {}", p.rows, p.taps, input.rows, input.taps));
  ForwardCache cache;
  return forward(p, input.values, cache);
}

void backward(const ModelParams& p, const ForwardCache& cache, const Vec2& dz, std::span<double> grad) {
  require(grad.size() == p.theta.size(), Errc::dimension_mismatch, "gradient size");
  const double* th = p.theta.data();
  std::vector<double> delta = {dz[0] * p.output_scale[0], dz[1] * p.output_scale[1]};
  std::vector<double> prev;
  for (std::size_t li = p.layers.size(); li-- > 0;) {
    const auto& l = p.layers[li];
    const auto& x = cache.acts[li];
    const auto& y = cache.acts[li + 1];
    prev.assign(l.in_ch * l.in_len, 0.0);
    switch (l.kind) {
      case LayerKind::conv1d: {
        const double* w = th + l.w_off;
        double* gw = grad.data() + l.w_off;
        double* gb = grad.data() + l.b_off;
        for (std::size_t o = 0; o < l.out; ++o) {
          const double* d = delta.data() + o * l.out_len;
          for (std::size_t t = 0; t < l.out_len; ++t) gb[o] += d[t];
          for (std::size_t i = 0; i < l.in; ++i) {
            const double* xi = x.data() + i * l.in_len;
            double* pi = prev.data() + i * l.in_len;
            const double* wk = w + (o * l.in + i) * l.kernel;
            double* gk = gw + (o * l.in + i) * l.kernel;
            for (std::size_t t = 0; t < l.out_len; ++t) {
              const double dt = d[t];
              const std::size_t s = t * l.stride;
              for (std::size_t k = 0; k < l.kernel; ++k) {
                gk[k] += dt * xi[s + k];
                pi[s + k] += dt * wk[k];
              }
            }
          }
        }
        break;
      }
      case LayerKind::dense: {
        const double* w = th + l.w_off;
        double* gw = grad.data() + l.w_off;
        double* gb = grad.data() + l.b_off;
        for (std::size_t o = 0; o < l.out; ++o) {
          const double d = delta[o];
          gb[o] += d;
          const double* wo = w + o * l.in;
          double* go = gw + o * l.in;
          for (std::size_t i = 0; i < l.in; ++i) {
            go[i] += d * x[i];
            prev[i] += d * wo[i];
          }
        }
        break;
      }
      case LayerKind::tanh:
        for (std::size_t i = 0; i < prev.size(); ++i) prev[i] = delta[i] * (1.0 - y[i] * y[i]);
        break;
      case LayerKind::flatten:
        prev = delta;
        break;
    }
    delta.swap(prev);
  }
}

void save_params(const ModelParams& p, const std::string& path) {
  Bytes out;
  ByteWriter w(out);
  w.u32(kWeightMagic);
  w.u32(static_cast<std::uint32_t>(p.rows));
  w.u32(static_cast<std::uint32_t>(p.taps));
  w.f64(p.alpha);
  for (double v : p.output_offset) w.f64(v);
  for (double v : p.output_scale) w.f64(v);
  w.u32(static_cast<std::uint32_t>(p.layers.size()));
  for (const auto& l : p.layers) {
    w.u8(static_cast<std::uint8_t>(l.kind));
    w.u32(static_cast<std::uint32_t>(l.in));
    w.u32(static_cast<std::uint32_t>(l.out));
    w.u32(static_cast<std::uint32_t>(l.kernel));
    w.u32(static_cast<std::uint32_t>(l.stride));
  }
  w.u64(p.theta.size());
  for (double v : p.theta) w.f64(v);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  require(f.good(), Errc::io_error, "cannot write weights " + path);
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  f.close();
  require(!f.fail(), Errc::io_error, "write failed for " + path);
}

ModelParams load_params(const std::string& path, std::size_t expected_taps) {
  std::ifstream f(path, std::ios::binary);
  require(f.good(), Errc::io_error, "cannot open weights " + path);
  Bytes buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  ByteReader r(buf, Errc::manifest_mismatch);
  require(buf.size() >= 4 && r.u32() == kWeightMagic, Errc::bad_magic, path + " is not a CCW1 weight file");
  ModelParams p;
  const std::size_t rows = r.u32();
  const std::size_t taps = r.u32();
  const double alpha = r.f64();
  Vec2 offset{r.f64(), r.f64()};
  Vec2 scale{r.f64(), r.f64()};
  const std::size_t count = r.u32();
  require(count <= 1024, Errc::manifest_mismatch, "implausible layer count");
  std::string spec;
  std::vector<std::size_t> ins;
  for (std::size_t i = 0; i < count; ++i) {
    const auto kind = r.u8();
    const std::size_t in = r.u32();
    const std::size_t out = r.u32();
    const std::size_t kernel = r.u32();
    const std::size_t stride = r.u32();
    ins.push_back(in);
    if (!spec.empty()) spec += ',';
    switch (static_cast<LayerKind>(kind)) {
      case LayerKind::conv1d: spec += fmt::format("conv:{}:{}:{}", out, kernel, stride); break;
      case LayerKind::dense: spec += fmt::format("dense:{}", out); break;
      case LayerKind::tanh: spec += "tanh"; break;
      case LayerKind::flatten: spec += "flatten"; break;
      default: fail(Errc::manifest_mismatch, fmt::format("unknown layer kind {}", kind));
    }
  }
  try {
    p = ModelParams::build(rows, taps, spec);
  } catch (const Error& e) {
    fail(Errc::manifest_mismatch, std::string("layer manifest does not chain: ") + e.what());
  }
  for (std::size_t i = 0; i < count; ++i)
    require(p.layers[i].in == ins[i], Errc::manifest_mismatch, fmt::format("layer {} input width disagrees", i));
  const auto n = r.u64();
  require(n == p.theta.size(), Errc::manifest_mismatch,
          fmt::format("manifest implies {} parameters, file declares {}", p.theta.size(), n));
  require(r.remaining() == 8 * n, Errc::manifest_mismatch,
          fmt::format("payload has {} bytes, expected {}", r.remaining(), 8 * n));
  for (auto& v : p.theta) v = r.f64();
  p.alpha = alpha;
  p.output_offset = offset;
  p.output_scale = scale;
  require(alpha > 0 && std::isfinite(alpha), Errc::manifest_mismatch, "invalid alpha");
  if (expected_taps > 0)
    require(taps == expected_taps, Errc::manifest_mismatch,
            fmt::format("model trained for C = {}, pipeline configured for C = {}", taps, expected_taps));
  return p;
}

}  // namespace e2srs::cc
