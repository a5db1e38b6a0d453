// Copyright 2026 The e2srs Authors
// SPDX-License-Identifier: Apache-2.0

// SRSD channel dataset file. Big-endian throughout.
//
//   header:   magic u32 "SRSD" | version u8 | K u8 | M_k u8 x K | n_fft u32 |
//             subcarrier_spacing_hz f64 | T u32 | flags u8
//   record:   timestamp_ns u64 | ground_truth f64 x 3 |
//             per TRP: [los u8] [oracle_tdoa_s f64] cfr (f32 re, f32 im) x n_fft
//
// Records have a fixed size, so snapshot i lives at header_size + i * record_size.

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "e2srs/bytes.hpp"
#include "e2srs/geometry.hpp"

namespace e2srs {

inline constexpr std::uint32_t kDatasetMagic = 0x53525344;
inline constexpr std::uint8_t kDatasetVersion = 1;

enum DatasetFlags : std::uint8_t {
  kHasGroundTruth = 1u << 0,
  kHasLosFlags = 1u << 1,
  kHasOracleTdoa = 1u << 2,
};

struct DatasetHeader {
  std::vector<std::uint8_t> trps_per_ru;
  std::uint32_t n_fft = 0;
  double subcarrier_spacing_hz = 30e3;
  std::uint32_t snapshot_count = 0;
  std::uint8_t flags = 0;

  std::size_t trp_count() const;
  std::size_t header_size() const { return 4 + 1 + 1 + trps_per_ru.size() + 4 + 8 + 4 + 1; }
  std::size_t record_size() const;
  /// Throws BAD_DIMENSIONS when the header breaks an invariant.
  void validate() const;
  /// True when the RU/TRP layout matches `g`.
  bool matches(const Geometry& g) const;
};

struct Snapshot {
  std::uint64_t timestamp_ns = 0;
  Vec3 ground_truth{std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN(),
                    std::numeric_limits<double>::quiet_NaN()};
  std::vector<std::uint8_t> los;     // per TRP, when present
  std::vector<double> oracle_tdoa;   // per TRP (seconds), when present
  std::vector<std::complex<float>> cfr;  // M x n_fft, row-major

  bool has_ground_truth() const { return !std::isnan(ground_truth[0]); }
};

/// Random-access reader; only the header is kept in memory.
class DatasetReader {
 public:
  explicit DatasetReader(const std::string& path);

  const DatasetHeader& header() const { return header_; }
  std::size_t size() const { return header_.snapshot_count; }
  Snapshot read(std::size_t index);
  std::uint64_t timestamp(std::size_t index);

 private:
  Bytes read_bytes(std::size_t offset, std::size_t n);

  std::string path_;
  std::ifstream file_;
  DatasetHeader header_;
};

/// Streams snapshots to disk; the snapshot count is patched into the header on `close()`.
class DatasetWriter {
 public:
  DatasetWriter(const std::string& path, DatasetHeader header);
  ~DatasetWriter();
  DatasetWriter(const DatasetWriter&) = delete;
  DatasetWriter& operator=(const DatasetWriter&) = delete;

  void write(const Snapshot& s);
  void close();
  std::size_t written() const { return count_; }

 private:
  std::ofstream file_;
  DatasetHeader header_;
  std::size_t count_ = 0;
  std::uint64_t last_ts_ = 0;
  bool closed_ = false;
};

Bytes encode_dataset_header(const DatasetHeader& h);
DatasetHeader decode_dataset_header(std::span<const std::uint8_t> bytes);

}  // namespace e2srs
