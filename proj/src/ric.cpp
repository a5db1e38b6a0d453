// Copyright 2026 The e2srs Authors
// SPDX-License-Identifier: Apache-2.0

#include "e2srs/ric.hpp"

#include <algorithm>

#include "e2srs/error.hpp"
#include "e2srs/log.hpp"

namespace e2srs::ric {

using namespace std::chrono_literals;

DeliveryQueue::DeliveryQueue(std::size_t capacity) : capacity_(std::max<std::size_t>(1, capacity)) {}

bool DeliveryQueue::push(Frame f) {
  bool kept_all = true;
  {
    std::lock_guard lk(mu_);
    if (closed_) return true;
    if (q_.size() == capacity_) {
      q_.pop_front();
      ++drops_;
      kept_all = false;
    }
    q_.push_back(std::move(f));
    high_water_ = std::max(high_water_, q_.size());
  }
  cv_.notify_one();
  return kept_all;
}

Frame DeliveryQueue::pop() {
  std::unique_lock lk(mu_);
  cv_.wait(lk, [&] { return closed_ || !q_.empty(); });
  if (q_.empty()) return nullptr;
  auto f = std::move(q_.front());
  q_.pop_front();
  return f;
}

Frame DeliveryQueue::pop_for(std::chrono::milliseconds timeout) {
  std::unique_lock lk(mu_);
  if (!cv_.wait_for(lk, timeout, [&] { return closed_ || !q_.empty(); }) || q_.empty()) return nullptr;
  auto f = std::move(q_.front());
  q_.pop_front();
  return f;
}

void DeliveryQueue::close() {
  {
    std::lock_guard lk(mu_);
    closed_ = true;
    q_.clear();
  }
  cv_.notify_all();
}

std::size_t DeliveryQueue::size() const {
  std::lock_guard lk(mu_);
  return q_.size();
}

std::uint64_t DeliveryQueue::drops() const {
  std::lock_guard lk(mu_);
  return drops_;
}

std::size_t DeliveryQueue::high_water() const {
  std::lock_guard lk(mu_);
  return high_water_;
}

RicCore::RicCore(std::size_t queue_capacity) : capacity_(queue_capacity) {}

wire::E2SetupResponse RicCore::register_agent(const wire::E2SetupRequest& setup, AgentSession session, Relay relay) {
  wire::E2SetupResponse resp;
  for (const auto& f : setup.functions)
    if (f.id == wire::kSrsPositioningFunction &&
        std::find(resp.accepted.begin(), resp.accepted.end(), f.id) == resp.accepted.end())
      resp.accepted.push_back(f.id);
  std::lock_guard lk(mu_);
  for (const auto& [sid, a] : agents_)
    require(a.agent_id != setup.agent_id, Errc::duplicate_agent_id,
            "agent id " + std::to_string(setup.agent_id) + " already has a live session");
  agents_[session] = Agent{setup.agent_id, !resp.accepted.empty(), std::move(relay)};
  return resp;
}

void RicCore::remove_agent(AgentSession session) {
  std::lock_guard lk(mu_);
  agents_.erase(session);
}

std::shared_ptr<DeliveryQueue> RicCore::add_subscriber(SubscriberId id) {
  std::lock_guard lk(mu_);
  auto& q = queues_[id];
  if (!q) q = std::make_shared<DeliveryQueue>(capacity_);
  return q;
}

void RicCore::remove_subscriber(SubscriberId id) {
  std::shared_ptr<DeliveryQueue> q;
  {
    std::lock_guard lk(mu_);
    for (auto it = table_.begin(); it != table_.end();) {
      it->second.erase(id);
      it = it->second.empty() ? table_.erase(it) : std::next(it);
    }
    auto it = queues_.find(id);
    if (it == queues_.end()) return;
    q = it->second;
    closed_drops_ += q->drops();
    closed_high_water_ = std::max(closed_high_water_, q->high_water());
    queues_.erase(it);
  }
  q->close();
}

wire::SubscriptionResponse RicCore::handle_subscription(const wire::SubscriptionRequest& req, SubscriberId subscriber) {
  wire::SubscriptionResponse resp{req.request_id, wire::SubscriptionStatus::accepted};
  if (req.function_id != wire::kSrsPositioningFunction) {
    resp.status = wire::SubscriptionStatus::rejected_unknown_function;
    return resp;
  }
  if (req.trigger != wire::kTriggerOnSrsIndication) {
    resp.status = wire::SubscriptionStatus::rejected_bad_trigger;
    return resp;
  }
  std::vector<Relay> relays;
  {
    std::lock_guard lk(mu_);
    if (!queues_.count(subscriber)) queues_[subscriber] = std::make_shared<DeliveryQueue>(capacity_);
    table_[{req.function_id, req.request_id}].insert(subscriber);
    for (const auto& [sid, a] : agents_)
      if (a.srs && a.relay) relays.push_back(a.relay);
  }
  for (auto& r : relays) {
    try {
      r(req);
    } catch (const Error& e) {
      log::warn("ric", "event=relay_failed request_id={} error=\"{}\"", req.request_id, e.what());
    }
  }
  return resp;
}

std::vector<wire::SubscriptionRequest> RicCore::active_subscriptions() const {
  std::lock_guard lk(mu_);
  std::vector<wire::SubscriptionRequest> out;
  for (const auto& [key, subs] : table_)
    if (!subs.empty()) out.push_back({key.second, key.first, wire::kTriggerOnSrsIndication});
  return out;
}

std::size_t RicCore::route_indication(const wire::RicIndication& ind, Frame frame) {
  std::vector<std::shared_ptr<DeliveryQueue>> targets;
  {
    std::lock_guard lk(mu_);
    ++routed_;
    auto it = table_.find({wire::kSrsPositioningFunction, ind.request_id});
    if (it == table_.end() || it->second.empty()) {
      ++unmatched_;
      return 0;
    }
    for (auto id : it->second) targets.push_back(queues_.at(id));
    delivered_ += targets.size();
  }
  for (auto& q : targets)
    if (!q->push(frame))
      log::warn("ric", "event=overflow_drop request_id={} sequence={}", ind.request_id, ind.sequence);
  return targets.size();
}

std::vector<SubscriberId> RicCore::subscribers(std::uint16_t function_id, std::uint32_t request_id) const {
  std::lock_guard lk(mu_);
  auto it = table_.find({function_id, request_id});
  if (it == table_.end()) return {};
  return {it->second.begin(), it->second.end()};
}

std::size_t RicCore::agent_count() const {
  std::lock_guard lk(mu_);
  return agents_.size();
}

RicStats RicCore::stats() const {
  std::lock_guard lk(mu_);
  RicStats s{routed_, delivered_, unmatched_, closed_drops_, closed_high_water_};
  for (const auto& [id, q] : queues_) {
    s.overflow_drops += q->drops();
    s.queue_high_water = std::max(s.queue_high_water, q->high_water());
  }
  return s;
}

Ric::Ric(RicConfig cfg) : cfg_(std::move(cfg)), core_(cfg_.queue_capacity) {}

Ric::~Ric() { stop(); }

void Ric::start() {
  agent_listener_ = std::make_unique<net::Listener>(net::Endpoint{cfg_.host, cfg_.agent_port});
  xapp_listener_ = std::make_unique<net::Listener>(net::Endpoint{cfg_.host, cfg_.xapp_port});
  agent_port_ = agent_listener_->port();
  xapp_port_ = xapp_listener_->port();
  log::info("ric", "event=listening agent_port={} xapp_port={}", agent_port_, xapp_port_);
  spawn([this] { accept_loop(*agent_listener_, true); });
  spawn([this] { accept_loop(*xapp_listener_, false); });
}

void Ric::stop() {
  if (stop_.exchange(true)) return;
  {
    std::lock_guard lk(streams_mu_);
    for (auto& w : streams_)
      if (auto s = w.lock()) s->shutdown();
  }
  std::vector<std::thread> threads;
  {
    std::lock_guard lk(threads_mu_);
    threads.swap(threads_);
  }
  for (auto& t : threads) t.join();
  // Connection threads may have spawned writers after the swap.
  {
    std::lock_guard lk(threads_mu_);
    threads.swap(threads_);
  }
  for (auto& t : threads) t.join();
  if (agent_listener_) agent_listener_->close();
  if (xapp_listener_) xapp_listener_->close();
  const auto s = core_.stats();
  log::info("ric", "event=stopped routed={} delivered={} unmatched={} overflow_drops={}", s.routed, s.delivered,
            s.unmatched, s.overflow_drops);
}

void Ric::spawn(std::function<void()> fn) {
  std::lock_guard lk(threads_mu_);
  threads_.emplace_back(std::move(fn));
}

void Ric::accept_loop(net::Listener& l, bool agent) {
  while (!stop_) {
    auto sock = l.accept(100ms);
    if (!sock.valid()) continue;
    auto stream = std::make_shared<net::MessageStream>(std::move(sock));
    {
      std::lock_guard lk(streams_mu_);
      std::erase_if(streams_, [](const auto& w) { return w.expired(); });
      streams_.push_back(stream);
    }
    const auto id = next_id_++;
    if (stop_) stream->shutdown();
    if (agent)
      spawn([this, stream, id] { serve_agent(stream, id); });
    else
      spawn([this, stream, id] { serve_xapp(stream, id); });
  }
}

void Ric::serve_agent(std::shared_ptr<net::MessageStream> s, AgentSession id) {
  bool registered = false;
  std::uint32_t agent_id = 0;
  try {
    Bytes frame;
    while (!stop_) {
      auto msg = s->receive(100ms, frame);
      if (!msg) continue;
      if (!registered) {
        auto* setup = std::get_if<wire::E2SetupRequest>(&*msg);
        if (!setup) {
          s->send(wire::ErrorIndication{wire::ErrorCause::protocol_error, "expected E2SetupRequest"});
          break;
        }
        std::weak_ptr<net::MessageStream> weak = s;
        wire::E2SetupResponse resp;
        try {
          resp = core_.register_agent(*setup, id, [weak](const wire::SubscriptionRequest& r) {
            if (auto st = weak.lock()) st->send(r);
          });
        } catch (const Error& e) {
          if (e.code() != Errc::duplicate_agent_id) throw;
          log::warn("ric", "event=duplicate_agent agent_id={}", setup->agent_id);
          s->send(wire::ErrorIndication{wire::ErrorCause::duplicate_agent_id, e.what()});
          break;
        }
        registered = true;
        agent_id = setup->agent_id;
        s->send(resp);
        log::info("ric", "event=agent_registered agent_id={} functions={}", agent_id, resp.accepted.size());
        // Subscriptions made before this agent arrived.
        if (!resp.accepted.empty())
          for (const auto& r : core_.active_subscriptions()) s->send(r);
        continue;
      }
      if (auto* ind = std::get_if<wire::RicIndication>(&*msg)) {
        const auto n = core_.route_indication(*ind, std::make_shared<const Bytes>(std::move(frame)));
        log::debug("ric", "event=route request_id={} sequence={} delivered={}", ind->request_id, ind->sequence, n);
        if (n == 0) log::debug("ric", "event=unmatched_drop request_id={}", ind->request_id);
        frame = Bytes();
      } else if (auto* sr = std::get_if<wire::SubscriptionResponse>(&*msg)) {
        log::info("ric", "event=agent_subscription_ack agent_id={} request_id={} status={}", agent_id, sr->request_id,
                  static_cast<int>(sr->status));
      } else {
        log::warn("ric", "event=unexpected_message agent_id={} type={}", agent_id,
                  static_cast<int>(wire::type_of(*msg)));
      }
    }
  } catch (const Error& e) {
    if (!stop_) log::info("ric", "event=agent_disconnected agent_id={} reason=\"{}\"", agent_id, e.what());
  }
  if (registered) core_.remove_agent(id);
  s->shutdown();
}

void Ric::serve_xapp(std::shared_ptr<net::MessageStream> s, SubscriberId id) {
  auto queue = core_.add_subscriber(id);
  std::thread writer([s, queue] {
    try {
      while (auto f = queue->pop()) s->send_bytes(*f);
    } catch (const Error&) {
      s->shutdown();
    }
  });
  try {
    while (!stop_) {
      auto msg = s->receive(100ms);
      if (!msg) continue;
      if (auto* req = std::get_if<wire::SubscriptionRequest>(&*msg)) {
        const auto resp = core_.handle_subscription(*req, id);
        s->send(resp);
        log::info("ric", "event=subscription subscriber={} request_id={} function_id={} status={}", id,
                  req->request_id, req->function_id, static_cast<int>(resp.status));
      } else {
        log::warn("ric", "event=unexpected_message subscriber={} type={}", id, static_cast<int>(wire::type_of(*msg)));
      }
    }
  } catch (const Error& e) {
    if (!stop_) log::info("ric", "event=xapp_disconnected subscriber={} reason=\"{}\"", id, e.what());
  }
  core_.remove_subscriber(id);
  writer.join();
  s->shutdown();
}

}  // namespace e2srs::ric
