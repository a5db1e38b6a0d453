// Copyright 2026 The e2srs Authors
// SPDX-License-Identifier: Apache-2.0

#include "e2srs/net.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <thread>

#include "e2srs/error.hpp"

namespace e2srs::net {
namespace {

std::string sys_error(const std::string& what) { return what + ": " + std::strerror(errno); }

sockaddr_in resolve(const Endpoint& ep) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(ep.port);
  const std::string host = ep.host.empty() || ep.host == "localhost" ? "127.0.0.1" : ep.host;
  if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) == 1) return addr;
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  require(getaddrinfo(host.c_str(), nullptr, &hints, &res) == 0 && res, Errc::config_error,
          "cannot resolve host " + host);
  addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
  freeaddrinfo(res);
  return addr;
}

// 0 on timeout, >0 when readable; throws on poll failure.
int wait_readable(int fd, std::chrono::milliseconds timeout) {
  pollfd p{fd, POLLIN, 0};
  for (;;) {
    int rc = ::poll(&p, 1, static_cast<int>(timeout.count()));
    if (rc >= 0) return rc;
    if (errno != EINTR) fail(Errc::connection_lost, sys_error("poll"));
  }
}

}  // namespace

Endpoint Endpoint::parse(const std::string& s) {
  const auto colon = s.rfind(':');
  require(colon != std::string::npos, Errc::config_error, "endpoint '" + s + "' is not host:port");
  Endpoint ep;
  if (colon > 0) ep.host = s.substr(0, colon);
  const std::string port = s.substr(colon + 1);
  char* end = nullptr;
  const long v = std::strtol(port.c_str(), &end, 10);
  require(!port.empty() && *end == '\0' && v >= 0 && v <= 65535, Errc::config_error, "bad port in '" + s + "'");
  ep.port = static_cast<std::uint16_t>(v);
  return ep;
}

std::string Endpoint::str() const { return host + ":" + std::to_string(port); }

std::uint16_t env_port(const char* name, std::uint16_t fallback) {
  const char* v = std::getenv(name);
  if (!v || !*v) return fallback;
  char* end = nullptr;
  const long p = std::strtol(v, &end, 10);
  require(*end == '\0' && p >= 0 && p <= 65535, Errc::config_error, std::string("bad port in ") + name);
  return static_cast<std::uint16_t>(p);
}

Socket& Socket::operator=(Socket&& o) noexcept {
  if (this != &o) {
    close();
    fd_ = o.fd_;
    o.fd_ = -1;
  }
  return *this;
}

void Socket::close() {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
}

void Socket::shutdown() {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

Listener::Listener(const Endpoint& ep) {
  int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  require(fd >= 0, Errc::io_error, sys_error("socket"));
  sock_ = Socket(fd);
  int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  auto addr = resolve(ep);
  require(::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0, Errc::io_error,
          sys_error("bind " + ep.str()));
  require(::listen(fd, 64) == 0, Errc::io_error, sys_error("listen"));
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

Socket Listener::accept(std::chrono::milliseconds timeout) {
  if (!sock_.valid() || wait_readable(sock_.fd(), timeout) == 0) return {};
  int fd = ::accept4(sock_.fd(), nullptr, nullptr, SOCK_CLOEXEC);
  if (fd < 0) return {};
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  return Socket(fd);
}

Socket connect(const Endpoint& ep, std::chrono::milliseconds timeout) {
  const auto addr = resolve(ep);
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
    require(fd >= 0, Errc::io_error, sys_error("socket"));
    Socket s(fd);
    if (::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) == 0) {
      int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      return s;
    }
    // The server may still be starting; retry until the deadline.
    if (std::chrono::steady_clock::now() >= deadline)
      fail(Errc::connection_lost, sys_error("connect " + ep.str()));
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
}

MessageStream::MessageStream(Socket s) : sock_(std::move(s)) {}

void MessageStream::send(const wire::Message& m) {
  const auto frame = wire::encode_message(m);
  send_bytes(frame);
}

void MessageStream::send_bytes(std::span<const std::uint8_t> frame) {
  std::lock_guard lk(send_mu_);
  std::size_t off = 0;
  while (off < frame.size()) {
    const ssize_t n = ::send(sock_.fd(), frame.data() + off, frame.size() - off, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) fail(Errc::connection_lost, sys_error("send"));
    off += static_cast<std::size_t>(n);
  }
}

void MessageStream::read_exact(std::uint8_t* dst, std::size_t n) {
  std::size_t off = 0;
  while (off < n) {
    const ssize_t r = ::recv(sock_.fd(), dst + off, n - off, 0);
    if (r < 0 && errno == EINTR) continue;
    if (r == 0) fail(Errc::connection_lost, "peer closed the connection");
    if (r < 0) fail(Errc::connection_lost, sys_error("recv"));
    off += static_cast<std::size_t>(r);
  }
}

std::optional<wire::Message> MessageStream::receive(std::chrono::milliseconds timeout) {
  Bytes frame;
  return receive(timeout, frame);
}

std::optional<wire::Message> MessageStream::receive(std::chrono::milliseconds timeout, Bytes& frame) {
  require(sock_.valid(), Errc::connection_lost, "stream closed");
  if (wait_readable(sock_.fd(), timeout) == 0) return std::nullopt;
  frame.resize(wire::kHeaderSize);
  read_exact(frame.data(), wire::kHeaderSize);
  const auto h = wire::decode_header(frame);
  frame.resize(wire::kHeaderSize + h.payload_len);
  read_exact(frame.data() + wire::kHeaderSize, h.payload_len);
  return wire::decode_payload(h, std::span<const std::uint8_t>(frame).subspan(wire::kHeaderSize));
}

}  // namespace e2srs::net
