// Copyright 2026 The e2srs Authors
// SPDX-License-Identifier: Apache-2.0

// E2 agent emulator: replays an SRSD dataset to the RIC as RIC indications.

#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <set>
#include <thread>

#include "e2srs/dataset.hpp"
#include "e2srs/net.hpp"
#include "e2srs/wire.hpp"

namespace e2srs::agent {

struct AgentConfig {
  net::Endpoint ric{"127.0.0.1", net::kDefaultAgentPort};
  std::uint32_t agent_id = 1;
  std::uint32_t ue_id = 1;
  double rate_hz = 10.0;
  bool loop = false;
  std::uint64_t max_sends = 0;  // 0 = one pass, or unbounded when looping
  double duration_s = 0.0;      // 0 = no limit
};

struct ReplaySummary {
  std::uint64_t sent = 0;  // snapshots emitted (one indication per active request id each)
  double duration_s = 0.0;
  bool connection_lost = false;
};

/// Frame (10 ms) and slot (0.5 ms) numbers derived from a timestamp.
std::uint16_t frame_of(std::uint64_t timestamp_ns);
std::uint8_t slot_of(std::uint64_t timestamp_ns);

/// SrsIndication for one snapshot; the CFR samples are copied bit for bit.
wire::SrsIndication make_indication(const Snapshot& s, const DatasetHeader& h, std::uint32_t ue_id,
                                    std::uint64_t timestamp_ns);

/// Timestamp of replay step `i` (loop mode re-bases each pass after the last snapshot).
std::uint64_t replay_timestamp(DatasetReader& d, std::uint64_t i);

class Agent {
 public:
  Agent(AgentConfig cfg, const std::string& dataset_path);
  ~Agent();
  Agent(const Agent&) = delete;
  Agent& operator=(const Agent&) = delete;

  /// Connects and completes E2 setup. Throws DUPLICATE_AGENT_ID or CONNECTION_LOST.
  void connect();
  bool wait_for_subscription(std::chrono::milliseconds timeout);
  std::set<std::uint32_t> subscriptions() const;

  /// Blocks until the replay ends. Throws NOT_SUBSCRIBED without an active subscription;
  /// a lost connection ends the replay with a partial summary.
  ReplaySummary replay(const std::atomic<bool>* stop = nullptr);
  void close();

  const DatasetHeader& header() const { return dataset_.header(); }

 private:
  void control_loop();

  AgentConfig cfg_;
  DatasetReader dataset_;
  std::shared_ptr<net::MessageStream> stream_;
  std::thread control_;
  std::atomic<bool> stop_{false};
  std::atomic<bool> lost_{false};
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::set<std::uint32_t> requests_;
};

}  // namespace e2srs::agent
