// Copyright 2026 The e2srs Authors
// SPDX-License-Identifier: Apache-2.0

#include "e2srs/agent.hpp"

#include <cmath>

#include "e2srs/error.hpp"
#include "e2srs/log.hpp"

namespace e2srs::agent {

using namespace std::chrono_literals;

std::uint16_t frame_of(std::uint64_t timestamp_ns) {
  return static_cast<std::uint16_t>((timestamp_ns / 10'000'000ULL) % wire::kMaxFrame);
}

std::uint8_t slot_of(std::uint64_t timestamp_ns) {
  return static_cast<std::uint8_t>((timestamp_ns % 10'000'000ULL) / 500'000ULL);
}

wire::SrsIndication make_indication(const Snapshot& s, const DatasetHeader& h, std::uint32_t ue_id,
                                    std::uint64_t timestamp_ns) {
  wire::SrsIndication ind;
  ind.ue_id = ue_id;
  ind.timestamp_ns = timestamp_ns;
  ind.frame = frame_of(timestamp_ns);
  ind.slot = slot_of(timestamp_ns);
  std::size_t row = 0;
  for (std::size_t k = 0; k < h.trps_per_ru.size(); ++k) {
    wire::RuChannel ru;
    ru.ru_id = static_cast<std::uint8_t>(k + 1);
    for (std::size_t m = 0; m < h.trps_per_ru[k]; ++m, ++row) {
      wire::TrpChannel t;
      t.trp_id = static_cast<std::uint8_t>(m + 1);
      auto first = s.cfr.begin() + static_cast<std::ptrdiff_t>(row * h.n_fft);
      t.cfr.assign(first, first + h.n_fft);
      ru.trps.push_back(std::move(t));
    }
    ind.rus.push_back(std::move(ru));
  }
  return ind;
}

std::uint64_t replay_timestamp(DatasetReader& d, std::uint64_t i) {
  const std::uint64_t t = d.size();
  const std::uint64_t pass = i / t;
  const std::uint64_t first = d.timestamp(0);
  const std::uint64_t span = d.timestamp(t - 1) - first;
  // One mean interval separates the last snapshot of a pass from the next pass.
  const std::uint64_t gap = t > 1 ? std::max<std::uint64_t>(1, span / (t - 1)) : 1'000'000ULL;
  return d.timestamp(i % t) + pass * (span + gap);
}

Agent::Agent(AgentConfig cfg, const std::string& dataset_path) : cfg_(std::move(cfg)), dataset_(dataset_path) {
  require(cfg_.rate_hz > 0.0 && std::isfinite(cfg_.rate_hz), Errc::config_error, "rate must be positive");
}

Agent::~Agent() { close(); }

void Agent::connect() {
  stream_ = std::make_shared<net::MessageStream>(net::connect(cfg_.ric));
  wire::E2SetupRequest setup{cfg_.agent_id, {{wire::kSrsPositioningFunction, "SRS Positioning", 1}}};
  stream_->send(setup);
  for (;;) {
    auto msg = stream_->receive(5s);
    require(msg.has_value(), Errc::connection_lost, "no E2 setup response from RIC");
    if (auto* err = std::get_if<wire::ErrorIndication>(&*msg)) {
      fail(err->cause == wire::ErrorCause::duplicate_agent_id ? Errc::duplicate_agent_id : Errc::connection_lost,
           err->message);
    }
    if (auto* resp = std::get_if<wire::E2SetupResponse>(&*msg)) {
      log::info("agent", "event=setup_complete agent_id={} accepted={}", cfg_.agent_id, resp->accepted.size());
      break;
    }
  }
  control_ = std::thread([this] { control_loop(); });
}

void Agent::control_loop() {
  try {
    while (!stop_) {
      auto msg = stream_->receive(100ms);
      if (!msg) continue;
      if (auto* req = std::get_if<wire::SubscriptionRequest>(&*msg)) {
        wire::SubscriptionResponse resp{req->request_id, wire::SubscriptionStatus::accepted};
        if (req->function_id != wire::kSrsPositioningFunction)
          resp.status = wire::SubscriptionStatus::rejected_unknown_function;
        else if (req->trigger != wire::kTriggerOnSrsIndication)
          resp.status = wire::SubscriptionStatus::rejected_bad_trigger;
        stream_->send(resp);
        if (resp.status == wire::SubscriptionStatus::accepted) {
          {
            std::lock_guard lk(mu_);
            requests_.insert(req->request_id);
          }
          cv_.notify_all();
          log::info("agent", "event=subscribed request_id={}", req->request_id);
        }
      } else if (auto* err = std::get_if<wire::ErrorIndication>(&*msg)) {
        log::warn("agent", "event=error_indication cause={} message=\"{}\"", static_cast<int>(err->cause),
                  err->message);
      }
    }
  } catch (const Error& e) {
    if (!stop_) log::warn("agent", "event=connection_lost reason=\"{}\"", e.what());
    lost_ = true;
    cv_.notify_all();
  }
}

bool Agent::wait_for_subscription(std::chrono::milliseconds timeout) {
  std::unique_lock lk(mu_);
  return cv_.wait_for(lk, timeout, [&] { return !requests_.empty() || lost_; }) && !requests_.empty();
}

std::set<std::uint32_t> Agent::subscriptions() const {
  std::lock_guard lk(mu_);
  return requests_;
}

ReplaySummary Agent::replay(const std::atomic<bool>* stop) {
  require(stream_ != nullptr, Errc::not_subscribed, "agent is not connected");
  require(!subscriptions().empty(), Errc::not_subscribed, "replay requested before any subscription");
  const auto& h = dataset_.header();
  std::uint64_t limit = cfg_.max_sends;
  if (limit == 0 && !cfg_.loop) limit = h.snapshot_count;
  const auto period = std::chrono::duration<double>(1.0 / cfg_.rate_hz);
  const auto t0 = std::chrono::steady_clock::now();
  ReplaySummary sum;
  for (std::uint64_t i = 0; limit == 0 || i < limit; ++i) {
    if ((stop && stop->load()) || lost_) break;
    const auto due = t0 + std::chrono::duration_cast<std::chrono::steady_clock::duration>(period * static_cast<double>(i));
    if (cfg_.duration_s > 0 && due - t0 >= std::chrono::duration<double>(cfg_.duration_s)) break;
    std::this_thread::sleep_until(due);
    const auto snap = dataset_.read(i % h.snapshot_count);
    wire::RicIndication ind;
    ind.sequence = i;
    ind.srs = make_indication(snap, h, cfg_.ue_id, replay_timestamp(dataset_, i));
    try {
      for (auto rid : subscriptions()) {
        ind.request_id = rid;
        stream_->send(ind);
      }
    } catch (const Error& e) {
      log::warn("agent", "event=connection_lost sent={} reason=\"{}\"", sum.sent, e.what());
      sum.connection_lost = true;
      break;
    }
    ++sum.sent;
  }
  if (lost_) sum.connection_lost = true;
  sum.duration_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  log::info("agent", "event=replay_done sent={} duration_s={:.3f}", sum.sent, sum.duration_s);
  return sum;
}

void Agent::close() {
  stop_ = true;
  if (stream_) stream_->shutdown();
  if (control_.joinable()) control_.join();
}

}  // namespace e2srs::agent
