// Copyright 2026 The e2srs Authors
// SPDX-License-Identifier: Apache-2.0

#include "e2srs/dataset.hpp"

#include <fmt/format.h>

#include <bit>
#include <cmath>
#include <filesystem>

#include "e2srs/error.hpp"

namespace e2srs {

std::size_t DatasetHeader::trp_count() const {
  std::size_t m = 0;
  for (auto v : trps_per_ru) m += v;
  return m;
}

std::size_t DatasetHeader::record_size() const {
  std::size_t per_trp = 8 * static_cast<std::size_t>(n_fft);
  if (flags & kHasLosFlags) per_trp += 1;
  if (flags & kHasOracleTdoa) per_trp += 8;
  return 8 + 24 + trp_count() * per_trp;
}

void DatasetHeader::validate() const {
  require(!trps_per_ru.empty() && trps_per_ru.size() <= 255, Errc::bad_dimensions, "K outside [1, 255]");
  for (auto m : trps_per_ru) require(m >= 1, Errc::bad_dimensions, "RU with zero TRPs");
  require(trp_count() <= 255, Errc::bad_dimensions, "sum of M_k exceeds 255");
  require(n_fft >= 1 && std::has_single_bit(n_fft), Errc::bad_dimensions, "n_fft not a power of two");
  require(snapshot_count >= 1, Errc::bad_dimensions, "T == 0");
  require(std::isfinite(subcarrier_spacing_hz) && subcarrier_spacing_hz > 0, Errc::bad_dimensions,
          "subcarrier spacing must be positive");
  require((flags & ~0x7u) == 0, Errc::bad_dimensions, "unknown flag bits");
}

bool DatasetHeader::matches(const Geometry& g) const {
  auto m = g.trps_per_ru();
  if (m.size() != trps_per_ru.size()) return false;
  for (std::size_t k = 0; k < m.size(); ++k)
    if (m[k] != trps_per_ru[k]) return false;
  return true;
}

Bytes encode_dataset_header(const DatasetHeader& h) {
  Bytes out;
  ByteWriter w(out);
  w.u32(kDatasetMagic);
  w.u8(kDatasetVersion);
  w.u8(static_cast<std::uint8_t>(h.trps_per_ru.size()));
  for (auto m : h.trps_per_ru) w.u8(m);
  w.u32(h.n_fft);
  w.f64(h.subcarrier_spacing_hz);
  w.u32(h.snapshot_count);
  w.u8(h.flags);
  return out;
}

DatasetHeader decode_dataset_header(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, Errc::bad_dimensions);
  require(r.u32() == kDatasetMagic, Errc::bad_magic, "not an SRSD file");
  auto version = r.u8();
  require(version == kDatasetVersion, Errc::bad_version, fmt::format("SRSD version {}", version));
  DatasetHeader h;
  std::size_t k = r.u8();
  for (std::size_t i = 0; i < k; ++i) h.trps_per_ru.push_back(r.u8());
  h.n_fft = r.u32();
  h.subcarrier_spacing_hz = r.f64();
  h.snapshot_count = r.u32();
  h.flags = r.u8();
  h.validate();
  return h;
}

DatasetReader::DatasetReader(const std::string& path) : path_(path), file_(path, std::ios::binary) {
  require(file_.good(), Errc::io_error, "cannot open dataset " + path);
  const auto file_size = std::filesystem::file_size(path);
  // 4 + 1 + 1 + 255 + 4 + 8 + 4 + 1 is the largest possible header.
  auto head = read_bytes(0, std::min<std::size_t>(file_size, 278));
  header_ = decode_dataset_header(head);
  const auto expected = header_.header_size() + static_cast<std::size_t>(header_.snapshot_count) * header_.record_size();
  require(file_size == expected, Errc::bad_dimensions,
          fmt::format("{}: size {} but header implies {}", path, file_size, expected));
  std::uint64_t prev = 0;
  for (std::size_t i = 0; i < header_.snapshot_count; ++i) {
    auto ts = timestamp(i);
    require(i == 0 || ts > prev, Errc::non_monotonic_timestamps,
            fmt::format("{}: snapshot {} timestamp {} <= {}", path, i, ts, prev));
    prev = ts;
  }
}

Bytes DatasetReader::read_bytes(std::size_t offset, std::size_t n) {
  Bytes buf(n);
  file_.clear();
  file_.seekg(static_cast<std::streamoff>(offset));
  file_.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n));
  require(static_cast<std::size_t>(file_.gcount()) == n, Errc::bad_dimensions, path_ + ": short read");
  return buf;
}

std::uint64_t DatasetReader::timestamp(std::size_t index) {
  require(index < size(), Errc::invalid_argument, "snapshot index out of range");
  auto b = read_bytes(header_.header_size() + index * header_.record_size(), 8);
  ByteReader r(b, Errc::bad_dimensions);
  return r.u64();
}

Snapshot DatasetReader::read(std::size_t index) {
  require(index < size(), Errc::invalid_argument, "snapshot index out of range");
  const auto& h = header_;
  auto b = read_bytes(h.header_size() + index * h.record_size(), h.record_size());
  ByteReader r(b, Errc::bad_dimensions);
  Snapshot s;
  s.timestamp_ns = r.u64();
  for (auto& v : s.ground_truth) v = r.f64();
  const std::size_t m = h.trp_count();
  const std::size_t n = h.n_fft;
  s.cfr.resize(m * n);
  if (h.flags & kHasLosFlags) s.los.resize(m);
  if (h.flags & kHasOracleTdoa) s.oracle_tdoa.resize(m);
  for (std::size_t row = 0; row < m; ++row) {
    if (h.flags & kHasLosFlags) s.los[row] = r.u8();
    if (h.flags & kHasOracleTdoa) s.oracle_tdoa[row] = r.f64();
    for (std::size_t i = 0; i < n; ++i) s.cfr[row * n + i] = r.cf32();
  }
  return s;
}

DatasetWriter::DatasetWriter(const std::string& path, DatasetHeader header)
    : file_(path, std::ios::binary | std::ios::trunc), header_(std::move(header)) {
  require(file_.good(), Errc::io_error, "cannot create dataset " + path);
  header_.snapshot_count = 1;  // placeholder so validate() accepts the header
  header_.validate();
  header_.snapshot_count = 0;
  auto b = encode_dataset_header(header_);
  file_.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

DatasetWriter::~DatasetWriter() {
  try {
    close();
  } catch (...) {
  }
}

void DatasetWriter::write(const Snapshot& s) {
  const std::size_t m = header_.trp_count();
  const std::size_t n = header_.n_fft;
  require(s.cfr.size() == m * n, Errc::dimension_mismatch, "snapshot CFR size does not match header");
  require(count_ == 0 || s.timestamp_ns > last_ts_, Errc::non_monotonic_timestamps, "timestamps must increase");
  const bool los = header_.flags & kHasLosFlags;
  const bool tdoa = header_.flags & kHasOracleTdoa;
  require(!los || s.los.size() == m, Errc::dimension_mismatch, "LoS flag count");
  require(!tdoa || s.oracle_tdoa.size() == m, Errc::dimension_mismatch, "oracle TDoA count");
  Bytes out;
  out.reserve(header_.record_size());
  ByteWriter w(out);
  w.u64(s.timestamp_ns);
  for (auto v : s.ground_truth) w.f64(v);
  for (std::size_t row = 0; row < m; ++row) {
    if (los) w.u8(s.los[row]);
    if (tdoa) w.f64(s.oracle_tdoa[row]);
    for (std::size_t i = 0; i < n; ++i) w.cf32(s.cfr[row * n + i]);
  }
  file_.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  require(file_.good(), Errc::io_error, "dataset write failed");
  last_ts_ = s.timestamp_ns;
  ++count_;
}

void DatasetWriter::close() {
  if (closed_) return;
  closed_ = true;
  require(count_ >= 1, Errc::bad_dimensions, "dataset has no snapshots");
  Bytes b;
  ByteWriter w(b);
  w.u32(static_cast<std::uint32_t>(count_));
  file_.seekp(static_cast<std::streamoff>(header_.header_size() - 5));
  file_.write(reinterpret_cast<const char*>(b.data()), 4);
  file_.close();
  require(!file_.fail(), Errc::io_error, "dataset close failed");
}

}  // namespace e2srs
