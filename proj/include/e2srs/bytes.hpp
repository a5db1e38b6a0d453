// Copyright 2026 The e2srs Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <bit>
#include <complex>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "e2srs/error.hpp"

namespace e2srs {

using Bytes = std::vector<std::uint8_t>;

/// Appends big-endian fields to a growing buffer.
class ByteWriter {
 public:
  explicit ByteWriter(Bytes& out) : out_(out) {}

  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { put_be(v, 2); }
  void u32(std::uint32_t v) { put_be(v, 4); }
  void u64(std::uint64_t v) { put_be(v, 8); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void cf32(std::complex<float> v) {
    f32(v.real());
    f32(v.imag());
  }
  void raw(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }

  /// Overwrites a previously written u32 at `pos`.
  void patch_u32(std::size_t pos, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_[pos + i] = static_cast<std::uint8_t>(v >> (24 - 8 * i));
  }

  std::size_t size() const { return out_.size(); }

 private:
  void put_be(std::uint64_t v, int n) {
    for (int i = n - 1; i >= 0; --i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  Bytes& out_;
};

/// Bounds-checked big-endian cursor. Running past the end throws `underrun`.
class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> in, Errc underrun) : in_(in), underrun_(underrun) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(get_be(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get_be(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get_be(4)); }
  std::uint64_t u64() { return get_be(8); }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::complex<float> cf32() {
    float re = f32();
    float im = f32();
    return {re, im};
  }
  std::span<const std::uint8_t> raw(std::size_t n) {
    need(n);
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  void need(std::size_t n) const {
    if (n > remaining()) fail(underrun_, "need " + std::to_string(n) + " bytes, have " + std::to_string(remaining()));
  }
  std::size_t remaining() const { return in_.size() - pos_; }
  std::size_t position() const { return pos_; }

 private:
  std::uint64_t get_be(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v = (v << 8) | in_[pos_ + i];
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
  Errc underrun_;
};

std::string to_hex(std::span<const std::uint8_t> b);
Bytes from_hex(std::string_view hex);

}  // namespace e2srs
