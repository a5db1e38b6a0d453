// Copyright 2026 The e2srs Authors
// SPDX-License-Identifier: Apache-2.0

// E2-lite framing and the E2SM-SRS indication payload.
//
// Every message is a 12-byte header followed by `payload_len` bytes:
//
//   magic u32 (0x45324C53) | version u8 (1) | msg_type u8 | flags u16 (0) | payload_len u32
//
// All integers are big-endian; complex samples are (re, im) IEEE-754 float pairs.

#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "e2srs/bytes.hpp"

namespace e2srs::wire {

inline constexpr std::uint32_t kMagic = 0x45324C53;
inline constexpr std::uint8_t kVersion = 1;
inline constexpr std::size_t kHeaderSize = 12;
inline constexpr std::uint32_t kMaxPayload = 64u << 20;

/// RAN function id of "SRS Positioning".
inline constexpr std::uint16_t kSrsPositioningFunction = 148;
inline constexpr std::uint8_t kTriggerOnSrsIndication = 1;

inline constexpr std::uint16_t kMaxFrame = 1024;
inline constexpr std::uint8_t kMaxSlot = 160;

enum class MsgType : std::uint8_t {
  e2_setup_request = 1,
  e2_setup_response = 2,
  subscription_request = 3,
  subscription_response = 4,
  ric_indication = 5,
  error_indication = 6,
};

struct MessageHeader {
  std::uint32_t magic = kMagic;
  std::uint8_t version = kVersion;
  MsgType type{};
  std::uint16_t flags = 0;
  std::uint32_t payload_len = 0;
};

struct RanFunction {
  std::uint16_t id = 0;
  std::string name;
  std::uint8_t revision = 0;
  bool operator==(const RanFunction&) const = default;
};

struct E2SetupRequest {
  std::uint32_t agent_id = 0;
  std::vector<RanFunction> functions;
  bool operator==(const E2SetupRequest&) const = default;
};

struct E2SetupResponse {
  std::vector<std::uint16_t> accepted;
  bool operator==(const E2SetupResponse&) const = default;
};

struct SubscriptionRequest {
  std::uint32_t request_id = 0;
  std::uint16_t function_id = kSrsPositioningFunction;
  // Kept raw so that a RIC can answer REJECTED_BAD_TRIGGER for unknown values.
  std::uint8_t trigger = kTriggerOnSrsIndication;
  bool operator==(const SubscriptionRequest&) const = default;
};

enum class SubscriptionStatus : std::uint8_t {
  accepted = 0,
  rejected_unknown_function = 1,
  rejected_bad_trigger = 2,
};

struct SubscriptionResponse {
  std::uint32_t request_id = 0;
  SubscriptionStatus status = SubscriptionStatus::accepted;
  bool operator==(const SubscriptionResponse&) const = default;
};

struct TrpChannel {
  std::uint8_t trp_id = 0;
  std::vector<std::complex<float>> cfr;  // n_fft samples
  bool operator==(const TrpChannel&) const = default;
};

struct RuChannel {
  std::uint8_t ru_id = 0;
  std::vector<TrpChannel> trps;
  bool operator==(const RuChannel&) const = default;
};

/// One SRS snapshot with full-resolution per-TRP channel estimates.
struct SrsIndication {
  std::uint32_t ue_id = 0;
  std::uint16_t frame = 0;
  std::uint8_t slot = 0;
  std::uint64_t timestamp_ns = 0;
  std::vector<RuChannel> rus;

  std::size_t n_fft() const { return rus.empty() || rus[0].trps.empty() ? 0 : rus[0].trps[0].cfr.size(); }
  std::size_t trp_count() const;
  bool operator==(const SrsIndication&) const = default;
};

struct RicIndication {
  std::uint32_t request_id = 0;
  std::uint64_t sequence = 0;
  SrsIndication srs;
  bool operator==(const RicIndication&) const = default;
};

enum class ErrorCause : std::uint8_t {
  unspecified = 0,
  duplicate_agent_id = 1,
  protocol_error = 2,
};

struct ErrorIndication {
  ErrorCause cause = ErrorCause::unspecified;
  std::string message;
  bool operator==(const ErrorIndication&) const = default;
};

using Message = std::variant<E2SetupRequest, E2SetupResponse, SubscriptionRequest, SubscriptionResponse,
                             RicIndication, ErrorIndication>;

MsgType type_of(const Message& m);

/// Throws Error(INVARIANT_VIOLATION) if the indication breaks a layout invariant.
void validate(const SrsIndication& s);

/// Encoded size of an SrsIndication body: 16 + sum_k (6 + M_k * (1 + 8 * n_fft)).
std::size_t srs_encoded_size(std::span<const std::size_t> trps_per_ru, std::size_t n_fft);

Bytes encode_message(const Message& m);
void encode_srs(ByteWriter& w, const SrsIndication& s);

/// Parses and validates the fixed header. Needs at least kHeaderSize bytes.
MessageHeader decode_header(std::span<const std::uint8_t> bytes);

struct Decoded {
  Message message;
  std::size_t consumed = 0;
};

/// Decodes exactly one message from the front of `bytes`. Safe on arbitrary input.
Decoded decode_message(std::span<const std::uint8_t> bytes);

/// Decodes a message body whose header was already parsed.
Message decode_payload(const MessageHeader& h, std::span<const std::uint8_t> payload);

}  // namespace e2srs::wire
