// Copyright 2026 The e2srs Authors
// SPDX-License-Identifier: Apache-2.0

// Near-RT RIC: agent registration, subscription relay, and indication fan-out.

#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <thread>
#include <vector>

#include "e2srs/net.hpp"
#include "e2srs/wire.hpp"

namespace e2srs::ric {

using Frame = std::shared_ptr<const Bytes>;

/// Bounded FIFO that discards its oldest entry on overflow.
class DeliveryQueue {
 public:
  explicit DeliveryQueue(std::size_t capacity = 256);

  /// Returns false when an older frame had to be dropped to make room.
  bool push(Frame f);
  /// Blocks until a frame is available or close() was called; nullptr after close.
  Frame pop();
  /// Like pop() but gives up after `timeout`.
  Frame pop_for(std::chrono::milliseconds timeout);
  void close();

  std::size_t size() const;
  std::size_t capacity() const { return capacity_; }
  std::uint64_t drops() const;
  std::size_t high_water() const;

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Frame> q_;
  std::size_t capacity_;
  std::uint64_t drops_ = 0;
  std::size_t high_water_ = 0;
  bool closed_ = false;
};

using SubscriberId = std::uint64_t;
using AgentSession = std::uint64_t;

struct RicStats {
  std::uint64_t routed = 0;          // indications received from agents
  std::uint64_t delivered = 0;       // copies enqueued
  std::uint64_t unmatched = 0;       // indications for unknown request ids
  std::uint64_t overflow_drops = 0;  // sum over subscriber queues
  std::size_t queue_high_water = 0;  // deepest any subscriber queue has been
};

/// Transport-independent RIC state. All methods are thread-safe.
class RicCore {
 public:
  using Relay = std::function<void(const wire::SubscriptionRequest&)>;

  explicit RicCore(std::size_t queue_capacity = 256);

  /// Throws DUPLICATE_AGENT_ID while another session holds the same agent id.
  wire::E2SetupResponse register_agent(const wire::E2SetupRequest& setup, AgentSession session, Relay relay);
  void remove_agent(AgentSession session);

  std::shared_ptr<DeliveryQueue> add_subscriber(SubscriberId id);
  void remove_subscriber(SubscriberId id);

  wire::SubscriptionResponse handle_subscription(const wire::SubscriptionRequest& req, SubscriberId subscriber);

  /// Enqueues `frame` once per subscriber of (148, ind.request_id); returns the count.
  std::size_t route_indication(const wire::RicIndication& ind, Frame frame);

  /// One request per (function, request id) that has at least one subscriber.
  std::vector<wire::SubscriptionRequest> active_subscriptions() const;
  std::vector<SubscriberId> subscribers(std::uint16_t function_id, std::uint32_t request_id) const;
  std::size_t agent_count() const;
  RicStats stats() const;

 private:
  struct Agent {
    std::uint32_t agent_id;
    bool srs;
    Relay relay;
  };
  using Key = std::pair<std::uint16_t, std::uint32_t>;

  mutable std::mutex mu_;
  std::size_t capacity_;
  std::map<AgentSession, Agent> agents_;
  std::map<Key, std::set<SubscriberId>> table_;
  std::map<SubscriberId, std::shared_ptr<DeliveryQueue>> queues_;
  std::uint64_t routed_ = 0, delivered_ = 0, unmatched_ = 0, closed_drops_ = 0;
  std::size_t closed_high_water_ = 0;
};

struct RicConfig {
  std::string host = "127.0.0.1";
  std::uint16_t agent_port = net::kDefaultAgentPort;  // 0 = ephemeral
  std::uint16_t xapp_port = net::kDefaultXappPort;
  std::size_t queue_capacity = 256;
};

/// TCP front end over RicCore: one thread per connection plus one writer per subscriber.
class Ric {
 public:
  explicit Ric(RicConfig cfg);
  ~Ric();
  Ric(const Ric&) = delete;
  Ric& operator=(const Ric&) = delete;

  void start();
  void stop();
  std::uint16_t agent_port() const { return agent_port_; }
  std::uint16_t xapp_port() const { return xapp_port_; }
  RicCore& core() { return core_; }

 private:
  void accept_loop(net::Listener& l, bool agent);
  void serve_agent(std::shared_ptr<net::MessageStream> s, AgentSession id);
  void serve_xapp(std::shared_ptr<net::MessageStream> s, SubscriberId id);
  void spawn(std::function<void()> fn);

  RicConfig cfg_;
  RicCore core_;
  std::unique_ptr<net::Listener> agent_listener_, xapp_listener_;
  std::uint16_t agent_port_ = 0, xapp_port_ = 0;
  std::atomic<bool> stop_{false};
  std::atomic<std::uint64_t> next_id_{1};
  std::mutex threads_mu_;
  std::vector<std::thread> threads_;
  std::mutex streams_mu_;
  std::vector<std::weak_ptr<net::MessageStream>> streams_;
};

}  // namespace e2srs::ric
