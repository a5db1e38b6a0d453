// Copyright 2026 The e2srs Authors
// SPDX-License-Identifier: Apache-2.0

// RIC, agent and xApp in one process, talking over loopback TCP.

#pragma once

#include <string>

#include "e2srs/agent.hpp"
#include "e2srs/ric.hpp"
#include "e2srs/xapp.hpp"

namespace e2srs {

struct E2eConfig {
  std::string dataset;
  std::string model;
  std::string geometry = "default";
  cc::PreprocessConfig preprocess;
  std::size_t window = 5;
  std::string out_csv;
  double rate_hz = 100.0;
  bool loop = false;
  double duration_s = 0.0;  // replay length in loop mode
  std::size_t queue_capacity = 256;
  std::uint32_t agent_id = 1;
  std::uint32_t ue_id = 1;
};

struct E2eSummary {
  agent::ReplaySummary replay;
  xapp::PipelineSummary pipeline;
  ric::RicStats ric;
};

E2eSummary run_e2e(const E2eConfig& cfg, const xapp::RecordSink& sink = {});

}  // namespace e2srs
