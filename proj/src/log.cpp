// Copyright 2026 The e2srs Authors
// SPDX-License-Identifier: Apache-2.0

#include "e2srs/log.hpp"

#include <cstdio>
#include <mutex>

#include "e2srs/error.hpp"

namespace e2srs::log {
namespace {
std::atomic<Level> g_level{Level::info};
std::mutex g_mu;
}  // namespace

Level level() { return g_level.load(std::memory_order_relaxed); }
void set_level(Level l) { g_level.store(l, std::memory_order_relaxed); }

Level parse_level(std::string_view s) {
  if (s == "debug") return Level::debug;
  if (s == "info") return Level::info;
  if (s == "warn") return Level::warn;
  if (s == "error") return Level::error;
  if (s == "off") return Level::off;
  fail(Errc::config_error, "unknown log level '" + std::string(s) + "'");
}

void write(Level l, std::string_view component, std::string_view line) {
  static constexpr const char* names[] = {"debug", "info", "warn", "error"};
  std::lock_guard lk(g_mu);
  std::fprintf(stderr, "level=%s component=%.*s %.*s\n", names[static_cast<int>(l)],
               static_cast<int>(component.size()), component.data(), static_cast<int>(line.size()), line.data());
}

}  // namespace e2srs::log
