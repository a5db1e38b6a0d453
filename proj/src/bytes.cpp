// Copyright 2026 The e2srs Authors
// SPDX-License-Identifier: Apache-2.0

#include "e2srs/bytes.hpp"

namespace e2srs {

std::string to_hex(std::span<const std::uint8_t> b) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s;
  s.reserve(2 * b.size());
  for (auto v : b) {
    s.push_back(digits[v >> 4]);
    s.push_back(digits[v & 0xF]);
  }
  return s;
}

Bytes from_hex(std::string_view hex) {
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  Bytes out;
  int hi = -1;
  for (char c : hex) {
    if (c == ' ' || c == '\t') continue;
    int v = nibble(c);
    require(v >= 0, Errc::invalid_argument, std::string("bad hex digit '") + c + "'");
    if (hi < 0) {
      hi = v;
    } else {
      out.push_back(static_cast<std::uint8_t>(hi << 4 | v));
      hi = -1;
    }
  }
  require(hi < 0, Errc::invalid_argument, "odd number of hex digits");
  return out;
}

}  // namespace e2srs
