// Copyright 2026 The e2srs Authors
// SPDX-License-Identifier: Apache-2.0

// Blocking TCP helpers and a framed message stream for the wire protocol.

#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <mutex>
#include <optional>
#include <string>

#include "e2srs/bytes.hpp"
#include "e2srs/wire.hpp"

namespace e2srs::net {

inline constexpr std::uint16_t kDefaultAgentPort = 36421;
inline constexpr std::uint16_t kDefaultXappPort = 36422;

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  /// "host:port" or ":port".
  static Endpoint parse(const std::string& s);
  std::string str() const;
};

/// Port from environment variable `name` (e.g. E2SRS_AGENT_PORT) or `fallback`.
std::uint16_t env_port(const char* name, std::uint16_t fallback);

class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket() { close(); }
  Socket(Socket&& o) noexcept : fd_(o.fd_) { o.fd_ = -1; }
  Socket& operator=(Socket&& o) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;

  int fd() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  void close();
  /// Wakes any thread blocked on this socket without releasing the descriptor.
  void shutdown();

 private:
  int fd_ = -1;
};

/// Bound, listening socket. Port 0 picks an ephemeral port.
class Listener {
 public:
  explicit Listener(const Endpoint& ep);
  std::uint16_t port() const { return port_; }
  /// Waits up to `timeout`; returns an invalid socket on timeout.
  Socket accept(std::chrono::milliseconds timeout);
  void close() { sock_.close(); }

 private:
  Socket sock_;
  std::uint16_t port_ = 0;
};

Socket connect(const Endpoint& ep, std::chrono::milliseconds timeout = std::chrono::seconds(5));

/// Length-framed wire messages over a socket. Sends are serialized by a mutex, so
/// one reader and any number of writers may share a stream.
class MessageStream {
 public:
  explicit MessageStream(Socket s);

  void send(const wire::Message& m);
  void send_bytes(std::span<const std::uint8_t> frame);

  /// Next message, or nullopt when `timeout` passes with no data. Throws
  /// CONNECTION_LOST when the peer closes, wire errors on malformed frames.
  std::optional<wire::Message> receive(std::chrono::milliseconds timeout);
  /// Like receive() but also returns the raw frame bytes.
  std::optional<wire::Message> receive(std::chrono::milliseconds timeout, Bytes& frame);

  void shutdown() { sock_.shutdown(); }
  bool valid() const { return sock_.valid(); }

 private:
  void read_exact(std::uint8_t* dst, std::size_t n);

  Socket sock_;
  std::mutex send_mu_;
};

}  // namespace e2srs::net
