// Copyright 2026 The e2srs Authors
// SPDX-License-Identifier: Apache-2.0

#include "e2srs/e2e.hpp"

#include <exception>
#include <thread>

#include "e2srs/error.hpp"
#include "e2srs/log.hpp"

namespace e2srs {

using namespace std::chrono_literals;

E2eSummary run_e2e(const E2eConfig& cfg, const xapp::RecordSink& sink) {
  require(!cfg.loop || cfg.duration_s > 0.0, Errc::config_error, "loop mode needs a duration");
  ric::Ric server({"127.0.0.1", 0, 0, cfg.queue_capacity});
  server.start();

  agent::AgentConfig acfg;
  acfg.ric = {"127.0.0.1", server.agent_port()};
  acfg.agent_id = cfg.agent_id;
  acfg.ue_id = cfg.ue_id;
  acfg.rate_hz = cfg.rate_hz;
  acfg.loop = cfg.loop;
  acfg.duration_s = cfg.duration_s;
  agent::Agent ag(acfg, cfg.dataset);

  xapp::PipelineConfig pcfg;
  pcfg.model_path = cfg.model;
  pcfg.geometry = cfg.geometry;
  pcfg.window = cfg.window;
  pcfg.out_csv = cfg.out_csv;
  pcfg.ric = {"127.0.0.1", server.xapp_port()};
  pcfg.preprocess = cfg.preprocess;
  pcfg.truth_dataset = cfg.dataset;
  pcfg.max_records = cfg.loop ? 0 : ag.header().snapshot_count;
  pcfg.idle_timeout_s = 2.0;

  E2eSummary sum;
  std::exception_ptr xapp_error;
  std::atomic<bool> stop{false};
  // Load the model before any traffic so a bad file fails fast.
  (void)xapp::make_localizer(pcfg);
  std::thread xapp_thread([&] {
    try {
      sum.pipeline = xapp::run_pipeline(pcfg, &stop, sink);
    } catch (...) {
      xapp_error = std::current_exception();
    }
  });

  try {
    ag.connect();
    require(ag.wait_for_subscription(10s), Errc::not_subscribed, "no subscription reached the agent");
    sum.replay = ag.replay();
  } catch (...) {
    stop = true;
    xapp_thread.join();
    ag.close();
    server.stop();
    throw;
  }
  xapp_thread.join();
  ag.close();
  sum.ric = server.core().stats();
  server.stop();
  if (xapp_error) std::rethrow_exception(xapp_error);
  log::info("e2e", "event=done sent={} records={} overflow_drops={} unmatched={}", sum.replay.sent,
            sum.pipeline.records, sum.ric.overflow_drops, sum.ric.unmatched);
  return sum;
}

}  // namespace e2srs
