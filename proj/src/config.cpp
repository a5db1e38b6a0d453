// Copyright 2026 The e2srs Authors
// SPDX-License-Identifier: Apache-2.0

#include "e2srs/config.hpp"

#include <fmt/format.h>

#include <charconv>
#include <fstream>
#include <sstream>

#include "e2srs/error.hpp"

namespace e2srs {
namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

const std::map<std::string, std::string> kEmpty;

}  // namespace

ConfigFile ConfigFile::parse(const std::string& text) {
  ConfigFile cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      require(line.back() == ']', Errc::config_error, fmt::format("config line {}: unterminated section", lineno));
      section = trim(line.substr(1, line.size() - 2));
      cfg.sections_[section];
      continue;
    }
    auto eq = line.find('=');
    require(eq != std::string::npos, Errc::config_error, fmt::format("config line {}: expected key = value", lineno));
    auto key = trim(line.substr(0, eq));
    require(!key.empty(), Errc::config_error, fmt::format("config line {}: empty key", lineno));
    cfg.sections_[section][key] = trim(line.substr(eq + 1));
  }
  return cfg;
}

ConfigFile ConfigFile::load(const std::string& path) {
  std::ifstream f(path);
  require(f.good(), Errc::io_error, "cannot open config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

const std::map<std::string, std::string>& ConfigFile::section(const std::string& s) const {
  auto it = sections_.find(s);
  return it == sections_.end() ? kEmpty : it->second;
}

SectionReader::SectionReader(const ConfigFile& cfg, std::string section)
    : section_(std::move(section)), values_(&cfg.section(section_)) {}

const std::string* SectionReader::find(const std::string& key) {
  used_.insert(key);
  auto it = values_->find(key);
  return it == values_->end() ? nullptr : &it->second;
}

double SectionReader::get(const std::string& key, double fallback) {
  const auto* v = find(key);
  if (!v) return fallback;
  try {
    std::size_t pos = 0;
    double d = std::stod(*v, &pos);
    require(pos == v->size(), Errc::config_error, "");
    return d;
  } catch (const std::exception&) {
    fail(Errc::config_error, fmt::format("[{}] {}: '{}' is not a number", section_, key, *v));
  }
}

long long SectionReader::get_int(const std::string& key, long long fallback) {
  const auto* v = find(key);
  if (!v) return fallback;
  long long out = 0;
  auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  require(ec == std::errc{} && p == v->data() + v->size(), Errc::config_error,
          fmt::format("[{}] {}: '{}' is not an integer", section_, key, *v));
  return out;
}

std::string SectionReader::get_str(const std::string& key, const std::string& fallback) {
  const auto* v = find(key);
  return v ? *v : fallback;
}

bool SectionReader::get_bool(const std::string& key, bool fallback) {
  const auto* v = find(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  fail(Errc::config_error, fmt::format("[{}] {}: '{}' is not a boolean", section_, key, *v));
}

void SectionReader::finish() const {
  for (const auto& [k, v] : *values_)
    require(used_.count(k) != 0, Errc::config_error, fmt::format("[{}] unknown key '{}'", section_, k));
}

}  // namespace e2srs
