// Copyright 2026 The e2srs Authors
// SPDX-License-Identifier: Apache-2.0

// Structured `key=value` log lines on stderr.

#pragma once

#include <fmt/format.h>

#include <atomic>
#include <string_view>

namespace e2srs::log {

enum class Level { debug = 0, info = 1, warn = 2, error = 3, off = 4 };

Level level();
void set_level(Level l);
Level parse_level(std::string_view s);

void write(Level l, std::string_view component, std::string_view line);

template <class... Args>
void info(std::string_view component, fmt::format_string<Args...> f, Args&&... args) {
  if (level() <= Level::info) write(Level::info, component, fmt::format(f, std::forward<Args>(args)...));
}
template <class... Args>
void warn(std::string_view component, fmt::format_string<Args...> f, Args&&... args) {
  if (level() <= Level::warn) write(Level::warn, component, fmt::format(f, std::forward<Args>(args)...));
}
template <class... Args>
void debug(std::string_view component, fmt::format_string<Args...> f, Args&&... args) {
  if (level() <= Level::debug) write(Level::debug, component, fmt::format(f, std::forward<Args>(args)...));
}
template <class... Args>
void error(std::string_view component, fmt::format_string<Args...> f, Args&&... args) {
  if (level() <= Level::error) write(Level::error, component, fmt::format(f, std::forward<Args>(args)...));
}

}  // namespace e2srs::log
