// Copyright 2026 The e2srs Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace e2srs {

enum class Errc {
  // wire
  bad_magic,
  bad_version,
  truncated,
  length_mismatch,
  unknown_msg_type,
  payload_too_large,
  invariant_violation,
  // ric / agent / xapp
  duplicate_agent_id,
  not_subscribed,
  connection_lost,
  subscription_rejected,
  model_mismatch,
  // files
  bad_dimensions,
  non_monotonic_timestamps,
  manifest_mismatch,
  io_error,
  config_error,
  // numerics
  dimension_mismatch,
  no_peak,
  degenerate_alpha,
  empty_set,
  all_zero,
  empty_batch,
  no_valid_pairs,
  no_ground_truth,
  invalid_argument,
};

constexpr std::string_view to_string(Errc c) noexcept {
  switch (c) {
    case Errc::bad_magic: return "BAD_MAGIC";
    case Errc::bad_version: return "BAD_VERSION";
    case Errc::truncated: return "TRUNCATED";
    case Errc::length_mismatch: return "LENGTH_MISMATCH";
    case Errc::unknown_msg_type: return "UNKNOWN_MSG_TYPE";
    case Errc::payload_too_large: return "PAYLOAD_TOO_LARGE";
    case Errc::invariant_violation: return "INVARIANT_VIOLATION";
    case Errc::duplicate_agent_id: return "DUPLICATE_AGENT_ID";
    case Errc::not_subscribed: return "NOT_SUBSCRIBED";
    case Errc::connection_lost: return "CONNECTION_LOST";
    case Errc::subscription_rejected: return "SUBSCRIPTION_REJECTED";
    case Errc::model_mismatch: return "MODEL_MISMATCH";
    case Errc::bad_dimensions: return "BAD_DIMENSIONS";
    case Errc::non_monotonic_timestamps: return "NON_MONOTONIC_TIMESTAMPS";
    case Errc::manifest_mismatch: return "MANIFEST_MISMATCH";
    case Errc::io_error: return "IO_ERROR";
    case Errc::config_error: return "CONFIG_ERROR";
    case Errc::dimension_mismatch: return "DIMENSION_MISMATCH";
    case Errc::no_peak: return "NO_PEAK";
    case Errc::degenerate_alpha: return "DEGENERATE_ALPHA";
    case Errc::empty_set: return "EMPTY_SET";
    case Errc::all_zero: return "ALL_ZERO";
    case Errc::empty_batch: return "EMPTY_BATCH";
    case Errc::no_valid_pairs: return "NO_VALID_PAIRS";
    case Errc::no_ground_truth: return "NO_GROUND_TRUTH";
    case Errc::invalid_argument: return "INVALID_ARGUMENT";
  }
  return "UNKNOWN";
}

/// Every failure in the library is reported as an `Error` carrying a code,
/// so callers can branch on the condition without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, Errc code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace e2srs
