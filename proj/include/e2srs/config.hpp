// Copyright 2026 The e2srs Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

namespace e2srs {

/// `key = value` text config with optional `[section]` headers and `#` comments.
/// Keys before any header belong to the section named "".
class ConfigFile {
 public:
  static ConfigFile parse(const std::string& text);
  static ConfigFile load(const std::string& path);

  bool has_section(const std::string& s) const { return sections_.count(s) != 0; }
  std::vector<std::string> sections() const {
    std::vector<std::string> out;
    for (const auto& [name, kv] : sections_) out.push_back(name);
    return out;
  }
  const std::map<std::string, std::string>& section(const std::string& s) const;
  void set(const std::string& section, const std::string& key, const std::string& value) {
    sections_[section][key] = value;
  }

 private:
  std::map<std::string, std::map<std::string, std::string>> sections_;
};

/// Typed view over one section. Every key must be consumed by a getter before
/// `finish()`, otherwise it is reported as unknown.
class SectionReader {
 public:
  SectionReader(const ConfigFile& cfg, std::string section);

  double get(const std::string& key, double fallback);
  long long get_int(const std::string& key, long long fallback);
  std::string get_str(const std::string& key, const std::string& fallback);
  bool get_bool(const std::string& key, bool fallback);

  void finish() const;

 private:
  const std::string* find(const std::string& key);

  std::string section_;
  const std::map<std::string, std::string>* values_;
  std::set<std::string> used_;
};

}  // namespace e2srs
