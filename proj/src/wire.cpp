// Copyright 2026 The e2srs Authors
// SPDX-License-Identifier: Apache-2.0

#include "e2srs/wire.hpp"

#include <bit>
#include <numeric>

namespace e2srs::wire {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check(bool cond, const std::string& what) { require(cond, Errc::invariant_violation, what); }

void put_string(ByteWriter& w, const std::string& s) {
  check(s.size() <= 0xFFFF, "string longer than 65535 bytes");
  w.u16(static_cast<std::uint16_t>(s.size()));
  auto p = reinterpret_cast<const std::uint8_t*>(s.data());
  w.raw({p, s.size()});
}

std::string get_string(ByteReader& r) {
  auto n = r.u16();
  auto b = r.raw(n);
  return {b.begin(), b.end()};
}

void encode_body(ByteWriter& w, const E2SetupRequest& m) {
  check(m.functions.size() <= 0xFF, "more than 255 RAN functions");
  w.u32(m.agent_id);
  w.u8(static_cast<std::uint8_t>(m.functions.size()));
  for (const auto& f : m.functions) {
    w.u16(f.id);
    put_string(w, f.name);
    w.u8(f.revision);
  }
}

void encode_body(ByteWriter& w, const E2SetupResponse& m) {
  check(m.accepted.size() <= 0xFF, "more than 255 accepted functions");
  w.u8(static_cast<std::uint8_t>(m.accepted.size()));
  for (auto id : m.accepted) w.u16(id);
}

void encode_body(ByteWriter& w, const SubscriptionRequest& m) {
  w.u32(m.request_id);
  w.u16(m.function_id);
  w.u8(m.trigger);
}

void encode_body(ByteWriter& w, const SubscriptionResponse& m) {
  check(static_cast<std::uint8_t>(m.status) <= 2, "unknown subscription status");
  w.u32(m.request_id);
  w.u8(static_cast<std::uint8_t>(m.status));
}

void encode_body(ByteWriter& w, const RicIndication& m) {
  w.u32(m.request_id);
  w.u64(m.sequence);
  encode_srs(w, m.srs);
}

void encode_body(ByteWriter& w, const ErrorIndication& m) {
  check(static_cast<std::uint8_t>(m.cause) <= 2, "unknown error cause");
  w.u8(static_cast<std::uint8_t>(m.cause));
  put_string(w, m.message);
}

SrsIndication decode_srs(ByteReader& r) {
  SrsIndication s;
  s.ue_id = r.u32();
  s.frame = r.u16();
  s.slot = r.u8();
  s.timestamp_ns = r.u64();
  std::size_t num_rus = r.u8();
  check(s.frame < kMaxFrame, "frame >= 1024");
  check(s.slot < kMaxSlot, "slot >= 160");
  check(num_rus >= 1, "num_rus == 0");
  std::uint32_t first_nfft = 0;
  s.rus.resize(num_rus);
  for (std::size_t k = 0; k < num_rus; ++k) {
    auto& ru = s.rus[k];
    ru.ru_id = r.u8();
    std::size_t num_trps = r.u8();
    std::uint32_t n_fft = r.u32();
    check(num_trps >= 1, "num_trps == 0");
    check(n_fft >= 1 && std::has_single_bit(n_fft), "n_fft not a power of two");
    if (k == 0) first_nfft = n_fft;
    check(n_fft == first_nfft, "n_fft differs across RUs");
    // Bound allocation by what the payload can actually hold.
    r.need(num_trps * (1 + 8 * static_cast<std::size_t>(n_fft)));
    ru.trps.resize(num_trps);
    for (auto& trp : ru.trps) {
      trp.trp_id = r.u8();
      trp.cfr.resize(n_fft);
      for (auto& c : trp.cfr) c = r.cf32();
    }
  }
  return s;
}

}  // namespace

std::size_t SrsIndication::trp_count() const {
  std::size_t n = 0;
  for (const auto& ru : rus) n += ru.trps.size();
  return n;
}

MsgType type_of(const Message& m) {
  return std::visit(overloaded{
                        [](const E2SetupRequest&) { return MsgType::e2_setup_request; },
                        [](const E2SetupResponse&) { return MsgType::e2_setup_response; },
                        [](const SubscriptionRequest&) { return MsgType::subscription_request; },
                        [](const SubscriptionResponse&) { return MsgType::subscription_response; },
                        [](const RicIndication&) { return MsgType::ric_indication; },
                        [](const ErrorIndication&) { return MsgType::error_indication; },
                    },
                    m);
}

void validate(const SrsIndication& s) {
  check(s.frame < kMaxFrame, "frame >= 1024");
  check(s.slot < kMaxSlot, "slot >= 160");
  check(!s.rus.empty() && s.rus.size() <= 0xFF, "num_rus outside [1, 255]");
  const std::size_t n = s.n_fft();
  check(n >= 1 && n <= 0xFFFFFFFFu && std::has_single_bit(n), "n_fft not a power of two");
  for (const auto& ru : s.rus) {
    check(!ru.trps.empty() && ru.trps.size() <= 0xFF, "num_trps outside [1, 255]");
    for (const auto& trp : ru.trps) check(trp.cfr.size() == n, "n_fft differs across TRPs");
  }
}

std::size_t srs_encoded_size(std::span<const std::size_t> trps_per_ru, std::size_t n_fft) {
  std::size_t total = 16;
  for (auto m : trps_per_ru) total += 6 + m * (1 + 8 * n_fft);
  return total;
}

void encode_srs(ByteWriter& w, const SrsIndication& s) {
  validate(s);
  const auto n = static_cast<std::uint32_t>(s.n_fft());
  w.u32(s.ue_id);
  w.u16(s.frame);
  w.u8(s.slot);
  w.u64(s.timestamp_ns);
  w.u8(static_cast<std::uint8_t>(s.rus.size()));
  for (const auto& ru : s.rus) {
    w.u8(ru.ru_id);
    w.u8(static_cast<std::uint8_t>(ru.trps.size()));
    w.u32(n);
    for (const auto& trp : ru.trps) {
      w.u8(trp.trp_id);
      for (auto c : trp.cfr) w.cf32(c);
    }
  }
}

Bytes encode_message(const Message& m) {
  Bytes out;
  ByteWriter w(out);
  w.u32(kMagic);
  w.u8(kVersion);
  w.u8(static_cast<std::uint8_t>(type_of(m)));
  w.u16(0);
  w.u32(0);
  std::visit([&](const auto& body) { encode_body(w, body); }, m);
  const std::size_t len = out.size() - kHeaderSize;
  check(len <= kMaxPayload, "payload exceeds 64 MiB");
  w.patch_u32(8, static_cast<std::uint32_t>(len));
  return out;
}

MessageHeader decode_header(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, Errc::truncated);
  MessageHeader h;
  h.magic = r.u32();
  h.version = r.u8();
  auto type = r.u8();
  h.flags = r.u16();
  h.payload_len = r.u32();
  require(h.magic == kMagic, Errc::bad_magic, "magic mismatch");
  require(h.version == kVersion, Errc::bad_version, "unsupported version " + std::to_string(h.version));
  require(type >= 1 && type <= 6, Errc::unknown_msg_type, "msg_type " + std::to_string(type));
  h.type = static_cast<MsgType>(type);
  require(h.flags == 0, Errc::invariant_violation, "nonzero flags");
  require(h.payload_len <= kMaxPayload, Errc::payload_too_large, "payload_len " + std::to_string(h.payload_len));
  return h;
}

Message decode_payload(const MessageHeader& h, std::span<const std::uint8_t> payload) {
  ByteReader r(payload, Errc::length_mismatch);
  Message out;
  switch (h.type) {
    case MsgType::e2_setup_request: {
      E2SetupRequest m;
      m.agent_id = r.u32();
      std::size_t n = r.u8();
      m.functions.resize(n);
      for (auto& f : m.functions) {
        f.id = r.u16();
        f.name = get_string(r);
        f.revision = r.u8();
      }
      out = std::move(m);
      break;
    }
    case MsgType::e2_setup_response: {
      E2SetupResponse m;
      std::size_t n = r.u8();
      m.accepted.resize(n);
      for (auto& id : m.accepted) id = r.u16();
      out = std::move(m);
      break;
    }
    case MsgType::subscription_request: {
      SubscriptionRequest m;
      m.request_id = r.u32();
      m.function_id = r.u16();
      m.trigger = r.u8();
      out = m;
      break;
    }
    case MsgType::subscription_response: {
      SubscriptionResponse m;
      m.request_id = r.u32();
      auto st = r.u8();
      check(st <= 2, "unknown subscription status");
      m.status = static_cast<SubscriptionStatus>(st);
      out = m;
      break;
    }
    case MsgType::ric_indication: {
      RicIndication m;
      m.request_id = r.u32();
      m.sequence = r.u64();
      m.srs = decode_srs(r);
      out = std::move(m);
      break;
    }
    case MsgType::error_indication: {
      ErrorIndication m;
      auto cause = r.u8();
      check(cause <= 2, "unknown error cause");
      m.cause = static_cast<ErrorCause>(cause);
      m.message = get_string(r);
      out = std::move(m);
      break;
    }
  }
  require(r.remaining() == 0, Errc::length_mismatch, std::to_string(r.remaining()) + " trailing payload bytes");
  return out;
}

Decoded decode_message(std::span<const std::uint8_t> bytes) {
  require(bytes.size() >= kHeaderSize, Errc::truncated, "short header");
  auto h = decode_header(bytes);
  const std::size_t total = kHeaderSize + h.payload_len;
  require(bytes.size() >= total, Errc::truncated,
          "payload_len " + std::to_string(h.payload_len) + " but " + std::to_string(bytes.size() - kHeaderSize) +
              " bytes follow");
  return {decode_payload(h, bytes.subspan(kHeaderSize, h.payload_len)), total};
}

}  // namespace e2srs::wire
