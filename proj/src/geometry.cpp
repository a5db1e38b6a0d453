// Copyright 2026 The e2srs Authors
// SPDX-License-Identifier: Apache-2.0

#include "e2srs/geometry.hpp"

#include <fmt/format.h>

#include <fstream>
#include <sstream>

#include "e2srs/error.hpp"

namespace e2srs {

Geometry::Geometry(std::vector<Ru> rus) : rus_(std::move(rus)) {
  require(!rus_.empty(), Errc::config_error, "geometry has no RUs");
  for (const auto& ru : rus_) {
    require(!ru.trps.empty(), Errc::config_error, fmt::format("RU {} has no TRPs", ru.ru_id));
    require(ru.ref < ru.trps.size(), Errc::config_error, fmt::format("RU {} reference index out of range", ru.ru_id));
  }
  index();
  require(total_ <= 255, Errc::config_error, "more than 255 TRPs");
  for (std::size_t a = 0; a < total_; ++a)
    for (std::size_t b = a + 1; b < total_; ++b)
      require(position(a) != position(b), Errc::config_error, fmt::format("TRP rows {} and {} share a position", a, b));
}

void Geometry::index() {
  offsets_.clear();
  ru_of_row_.clear();
  total_ = 0;
  for (std::size_t k = 0; k < rus_.size(); ++k) {
    offsets_.push_back(total_);
    for (std::size_t m = 0; m < rus_[k].trps.size(); ++m) ru_of_row_.push_back(k);
    total_ += rus_[k].trps.size();
  }
}

std::vector<std::size_t> Geometry::trps_per_ru() const {
  std::vector<std::size_t> out;
  for (const auto& ru : rus_) out.push_back(ru.trps.size());
  return out;
}

Geometry Geometry::parse(const std::string& text) {
  std::vector<Ru> rus;
  std::vector<bool> has_ref;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    int ru_id = 0;
    int trp_id = 0;
    Vec3 p{};
    if (!(ls >> ru_id)) continue;  // blank
    require(static_cast<bool>(ls >> trp_id >> p[0] >> p[1] >> p[2]), Errc::config_error,
            fmt::format("geometry line {}: expected `ru_id trp_id x y z [ref]`", lineno));
    require(ru_id >= 0 && ru_id <= 255 && trp_id >= 0 && trp_id <= 255, Errc::config_error,
            fmt::format("geometry line {}: ids must fit in 8 bits", lineno));
    std::string tag;
    bool is_ref = false;
    if (ls >> tag) {
      require(tag == "ref", Errc::config_error, fmt::format("geometry line {}: unexpected token '{}'", lineno, tag));
      is_ref = true;
    }
    std::size_t k = 0;
    while (k < rus.size() && rus[k].ru_id != ru_id) ++k;
    if (k == rus.size()) {
      rus.push_back(Ru{static_cast<std::uint8_t>(ru_id), {}, 0});
      has_ref.push_back(false);
    }
    if (is_ref) {
      require(!has_ref[k], Errc::config_error, fmt::format("RU {} has more than one reference TRP", ru_id));
      has_ref[k] = true;
      rus[k].ref = rus[k].trps.size();
    }
    rus[k].trps.push_back(Trp{static_cast<std::uint8_t>(ru_id), static_cast<std::uint8_t>(trp_id), p});
  }
  for (std::size_t k = 0; k < rus.size(); ++k)
    require(has_ref[k], Errc::config_error, fmt::format("RU {} has no reference TRP", rus[k].ru_id));
  return Geometry(std::move(rus));
}

Geometry Geometry::load(const std::string& path) {
  if (path == "default") return default_layout();
  std::ifstream f(path);
  require(f.good(), Errc::io_error, "cannot open geometry file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

Geometry Geometry::default_layout() {
  // RU 1 along the south edge at ground level, RU 2 on a rooftop to the north.
  // The test area spans x in [0, 50], y in [5, 15].
  std::vector<Ru> rus(2);
  rus[0].ru_id = 1;
  rus[0].trps = {{1, 1, {0.0, 0.0, 0.0}}, {1, 2, {17.0, -2.0, 0.5}}, {1, 3, {34.0, -2.0, 0.5}}, {1, 4, {51.0, 0.0, 0.0}}};
  rus[0].ref = 0;
  rus[1].ru_id = 2;
  rus[1].trps = {{2, 1, {-1.0, 21.0, 4.0}}, {2, 2, {16.0, 23.0, 4.0}}, {2, 3, {35.0, 23.0, 4.0}}, {2, 4, {52.0, 21.0, 4.0}}};
  rus[1].ref = 1;
  return Geometry(std::move(rus));
}

std::string Geometry::to_text() const {
  std::string out = "# ru_id trp_id x y z [ref]\n";
  for (const auto& ru : rus_)
    for (std::size_t m = 0; m < ru.trps.size(); ++m) {
      const auto& t = ru.trps[m];
      out += fmt::format("{} {} {} {} {}{}\n", t.ru_id, t.trp_id, t.position[0], t.position[1], t.position[2],
                         m == ru.ref ? " ref" : "");
    }
  return out;
}

}  // namespace e2srs
