// Copyright 2026 The e2srs Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <fmt/format.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <atomic>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <thread>

#include "e2srs/agent.hpp"
#include "e2srs/config.hpp"
#include "e2srs/e2e.hpp"
#include "e2srs/error.hpp"
#include "e2srs/log.hpp"
#include "e2srs/ric.hpp"
#include "e2srs/synth.hpp"
#include "e2srs/train.hpp"
#include "e2srs/xapp.hpp"

#ifndef E2SRS_VERSION
#define E2SRS_VERSION "0.0.0"
#endif

namespace e2srs::cli {
namespace {

using json = nlohmann::json;
using namespace std::chrono_literals;

std::atomic<bool> g_stop{false};
extern "C" void on_signal(int) { g_stop = true; }

void install_signals() {
  g_stop = false;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
}

ConfigFile load_config(const std::string& path) {
  if (path.empty()) return ConfigFile::parse("");
  auto cfg = ConfigFile::load(path);
  for (const auto& s : cfg.sections())
    require(s == "channel" || s == "preprocess" || s == "train" || (s.empty() && cfg.section(s).empty()),
            Errc::config_error, path + ": unknown section [" + s + "]");
  return cfg;
}

std::string num(double v) { return fmt::format("{}", v); }

std::string materialize(const synth::ChannelConfig& c) {
  std::string s = "[channel]\n";
  s += fmt::format("n_fft = {}\n", c.n_fft);
  s += fmt::format("subcarrier_spacing_hz = {}\n", num(c.subcarrier_spacing_hz));
  s += fmt::format("band_start = {}\nband_size = {}\npaths = {}\n", c.band_start, c.band_size, c.paths);
  s += fmt::format("nlos_probability = {}\n", num(c.nlos_probability));
  s += fmt::format("excess_delay_min_s = {}\nexcess_delay_max_s = {}\n", num(c.excess_delay_min_s),
                   num(c.excess_delay_max_s));
  s += fmt::format("nlos_direct_gain_min = {}\nnlos_direct_gain_max = {}\n", num(c.nlos_direct_gain_min),
                   num(c.nlos_direct_gain_max));
  s += fmt::format("scatter_scale_min = {}\nscatter_scale_max = {}\n", num(c.scatter_scale_min),
                   num(c.scatter_scale_max));
  s += fmt::format("snr_db = {}\n", num(c.snr_db));
  s += fmt::format("ru_timing_offset_std_s = {}\n", num(c.ru_timing_offset_std_s));
  s += fmt::format("glitch_probability = {}\nglitch_min_s = {}\nglitch_max_s = {}\n", num(c.glitch_probability),
                   num(c.glitch_min_s), num(c.glitch_max_s));
  s += fmt::format("seed = {}\n", c.seed);
  return s;
}

std::string materialize(const cc::PreprocessConfig& p) {
  std::string s = "[preprocess]\n";
  s += fmt::format("taps = {}\noutlier_jump = {}\noutlier_window = {}\n", p.taps, p.outlier_jump, p.outlier_window);
  s += fmt::format("peak_ratio = {}\nsubcarrier_spacing_hz = {}\n", num(p.peak_ratio), num(p.subcarrier_spacing_hz));
  s += fmt::format("los_papr = {}\nlos_arrival_fraction = {}\nlos_arrival_window = {}\n", num(p.los_papr),
                   num(p.los_arrival_fraction), p.los_arrival_window);
  s += fmt::format("los_level_ratio = {}\ntdoa_margin_taps = {}\n", num(p.los_level_ratio), num(p.tdoa_margin_taps));
  return s;
}

std::string materialize(const cc::TrainConfig& t) {
  std::string s = "[train]\n";
  s += fmt::format("beta = {}\nepsilon_s = {}\nlearning_rate = {}\n", num(t.beta), num(t.epsilon_s),
                   num(t.learning_rate));
  s += fmt::format("adam_beta1 = {}\nadam_beta2 = {}\nadam_eps = {}\n", num(t.adam_beta1), num(t.adam_beta2),
                   num(t.adam_eps));
  s += fmt::format("batch = {}\nepochs = {}\npairs_per_epoch = {}\nseed = {}\n", t.batch, t.epochs, t.pairs_per_epoch,
                   t.seed);
  s += fmt::format("speed_of_light = {}\nue_height_m = {}\ndisplacement_noise_m = {}\n", num(t.speed_of_light),
                   num(t.ue_height_m), num(t.displacement_noise_m));
  s += fmt::format("probe_pairs = {}\nthreads = {}\narchitecture = {}\n", t.probe_pairs, t.threads, t.architecture);
  return s;
}

/// Every option of `sub` with its effective value, defaults included.
std::vector<std::string> resolved_args(const CLI::App& sub) {
  std::vector<std::string> out{sub.get_name()};
  for (const CLI::Option* o : sub.get_options()) {
    if (o->get_lnames().empty() || o->get_lnames()[0] == "help") continue;
    const std::string name = "--" + o->get_lnames()[0];
    if (o->get_type_size_max() == 0) {
      if (o->count() > 0) out.push_back(name);
      continue;
    }
    std::vector<std::string> vals;
    if (o->count() > 0) vals = o->results();
    if (vals.empty()) {
      if (o->get_default_str().empty()) continue;
      vals = {o->get_default_str()};
    }
    for (const auto& v : vals) {
      out.push_back(name);
      out.push_back(v);
    }
  }
  return out;
}

void write_manifest(const CLI::App& sub, const std::string& artifact, json extra) {
  json j;
  j["tool"] = "e2srs";
  j["version"] = E2SRS_VERSION;
  j["subcommand"] = sub.get_name();
  j["argv"] = resolved_args(sub);
  for (auto& [k, v] : extra.items()) j[k] = v;
  const std::string path = artifact + ".manifest.json";
  std::ofstream f(path, std::ios::trunc);
  require(f.good(), Errc::io_error, "cannot write " + path);
  f << j.dump(2) << "\n";
}

std::string temp_file(const std::string& tag, const std::string& content) {
  auto dir = std::filesystem::temp_directory_path();
  std::string templ = (dir / ("e2srs-" + tag + "-XXXXXX")).string();
  int fd = ::mkstemp(templ.data());
  require(fd >= 0, Errc::io_error, "cannot create temporary file");
  ::close(fd);
  std::ofstream f(templ, std::ios::trunc);
  f << content;
  return templ;
}

std::string default_port_endpoint(const char* env, std::uint16_t fallback) {
  return fmt::format("127.0.0.1:{}", net::env_port(env, fallback));
}

// Shared flags for commands that run the localization pipeline.
struct PipelineFlags {
  std::string model;
  std::string geometry = "default";
  std::string config;
  std::size_t window = 5;
  std::string out;

  void add(CLI::App* sub) {
    sub->add_option("--model", model, "CCW1 weight file")->required();
    sub->add_option("--geometry", geometry, "geometry file or 'default'");
    sub->add_option("--config", config, "config file ([preprocess] section)");
    sub->add_option("--window", window, "moving-average window W")->check(CLI::PositiveNumber);
  }
};

}  // namespace

int dispatch(const std::vector<std::string>& args) {
  CLI::App app{"E2-lite SRS positioning: synthetic data, channel charting, RIC, agent and localization xApp"};
  app.set_version_flag("--version", E2SRS_VERSION);
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "debug, info, warn, error or off");

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic SRSD dataset");
  struct {
    std::string geometry = "default", config, trajectory, out;
    std::uint64_t seed = 0;
  } sy;
  synth_cmd->add_option("--geometry", sy.geometry, "geometry file or 'default'");
  synth_cmd->add_option("--config", sy.config, "config file ([channel] section)");
  synth_cmd->add_option("--trajectory", sy.trajectory, "trajectory file or testpoints[-static][:N]")->required();
  synth_cmd->add_option("--out", sy.out, "output .srsd path")->required();
  auto* sy_seed = synth_cmd->add_option("--seed", sy.seed, "RNG seed (overrides [channel] seed)")->default_str("");

  // train
  auto* train_cmd = app.add_subcommand("train", "train the channel-charting model");
  struct {
    std::string dataset, geometry = "default", config, out, loss_log;
    std::uint64_t seed = 0;
    std::size_t epochs = 0, threads = 0;
  } tr;
  train_cmd->add_option("--dataset", tr.dataset, "training .srsd")->required();
  train_cmd->add_option("--geometry", tr.geometry, "geometry file or 'default'");
  train_cmd->add_option("--config", tr.config, "config file ([preprocess], [train])");
  train_cmd->add_option("--out", tr.out, "output .ccw weight file")->required();
  auto* tr_seed = train_cmd->add_option("--seed", tr.seed, "training seed (overrides [train] seed)")->default_str("");
  auto* tr_epochs = train_cmd->add_option("--epochs", tr.epochs, "epochs (overrides [train] epochs)")->default_str("");
  auto* tr_threads = train_cmd->add_option("--threads", tr.threads, "gradient worker threads")->default_str("");
  train_cmd->add_option("--loss-log", tr.loss_log, "loss log CSV (default <out>.loss.csv)");

  // ric
  auto* ric_cmd = app.add_subcommand("ric", "run the near-RT RIC");
  struct {
    std::string host = "127.0.0.1";
    std::uint16_t agent_port = 0, xapp_port = 0;
    std::size_t queue = 256;
    double duration = 0.0;
  } rc;
  rc.agent_port = net::env_port("E2SRS_AGENT_PORT", net::kDefaultAgentPort);
  rc.xapp_port = net::env_port("E2SRS_XAPP_PORT", net::kDefaultXappPort);
  ric_cmd->add_option("--host", rc.host, "listen address");
  ric_cmd->add_option("--agent-port", rc.agent_port, "agent port (env E2SRS_AGENT_PORT)");
  ric_cmd->add_option("--xapp-port", rc.xapp_port, "xApp port (env E2SRS_XAPP_PORT)");
  ric_cmd->add_option("--queue-capacity", rc.queue, "per-subscriber queue capacity")->check(CLI::PositiveNumber);
  ric_cmd->add_option("--duration", rc.duration, "seconds to run (0 = until interrupted)");

  // agent
  auto* agent_cmd = app.add_subcommand("agent", "replay a dataset to the RIC");
  struct {
    std::string dataset, ric;
    double rate = 10.0, duration = 0.0, wait = 30.0;
    bool loop = false;
    std::uint32_t agent_id = 1, ue_id = 1;
    std::uint64_t max_sends = 0;
  } ag;
  ag.ric = default_port_endpoint("E2SRS_AGENT_PORT", net::kDefaultAgentPort);
  agent_cmd->add_option("--dataset", ag.dataset, ".srsd to replay")->required();
  agent_cmd->add_option("--ric", ag.ric, "RIC agent endpoint host:port");
  agent_cmd->add_option("--rate", ag.rate, "indications per second")->check(CLI::PositiveNumber);
  agent_cmd->add_flag("--loop", ag.loop, "restart from snapshot 0 at the end");
  agent_cmd->add_option("--agent-id", ag.agent_id, "E2 agent id");
  agent_cmd->add_option("--ue-id", ag.ue_id, "UE id stamped on every indication");
  agent_cmd->add_option("--max-sends", ag.max_sends, "stop after this many snapshots (0 = no limit)");
  agent_cmd->add_option("--duration", ag.duration, "stop after this many seconds (0 = no limit)");
  agent_cmd->add_option("--wait", ag.wait, "seconds to wait for a subscription");

  // xapp
  auto* xapp_cmd = app.add_subcommand("xapp", "run the localization xApp against a RIC");
  PipelineFlags xf;
  struct {
    std::string ric, truth;
    std::uint32_t request_id = 1;
    std::uint64_t max_records = 0;
    double idle_timeout = 0.0;
  } xa;
  xa.ric = default_port_endpoint("E2SRS_XAPP_PORT", net::kDefaultXappPort);
  xapp_cmd->add_option("--ric", xa.ric, "RIC xApp endpoint host:port");
  xf.add(xapp_cmd);
  xapp_cmd->add_option("--out", xf.out, "prediction CSV")->required();
  xapp_cmd->add_option("--request-id", xa.request_id, "subscription request id");
  xapp_cmd->add_option("--truth", xa.truth, "dataset supplying ground truth by sequence number");
  xapp_cmd->add_option("--max-records", xa.max_records, "stop after this many indications (0 = no limit)");
  xapp_cmd->add_option("--idle-timeout", xa.idle_timeout, "stop after this many idle seconds (0 = never)");

  // infer
  auto* infer_cmd = app.add_subcommand("infer", "offline batch inference over a dataset");
  PipelineFlags inf;
  std::string infer_dataset;
  infer_cmd->add_option("--dataset", infer_dataset, ".srsd to localize")->required();
  inf.add(infer_cmd);
  infer_cmd->add_option("--out", inf.out, "prediction CSV")->required();

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "error statistics of a prediction CSV");
  struct {
    std::string predictions, out, group = "point";
    bool raw = false;
  } ev;
  eval_cmd->add_option("--predictions", ev.predictions, "prediction CSV")->required();
  eval_cmd->add_option("--group", ev.group, "point or global")->check(CLI::IsMember({"point", "global"}));
  eval_cmd->add_flag("--raw", ev.raw, "score raw instead of smoothed estimates");
  eval_cmd->add_option("--out", ev.out, "evaluation CSV");

  // e2e
  auto* e2e_cmd = app.add_subcommand("e2e", "RIC + agent + xApp in one process over loopback");
  PipelineFlags ef;
  struct {
    std::string dataset;
    double rate = 100.0, duration = 0.0;
    bool loop = false;
    std::size_t queue = 256;
  } ee;
  e2e_cmd->add_option("--dataset", ee.dataset, ".srsd to replay")->required();
  ef.add(e2e_cmd);
  e2e_cmd->add_option("--out", ef.out, "prediction CSV")->required();
  e2e_cmd->add_option("--rate", ee.rate, "replay rate in Hz")->check(CLI::PositiveNumber);
  e2e_cmd->add_flag("--loop", ee.loop, "loop the dataset for --duration seconds");
  e2e_cmd->add_option("--duration", ee.duration, "replay seconds in loop mode");
  e2e_cmd->add_option("--queue-capacity", ee.queue, "per-subscriber queue capacity")->check(CLI::PositiveNumber);

  // replay-manifest
  auto* replay_cmd = app.add_subcommand("replay-manifest", "re-run the invocation recorded in a run manifest");
  std::string manifest_path, replay_out;
  replay_cmd->add_option("manifest", manifest_path, "*.manifest.json")->required();
  replay_cmd->add_option("--out", replay_out, "write the artifact here instead of the recorded path");

  std::vector<std::string> argv_store{"e2srs"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    log::set_level(log::parse_level(log_level));

    if (synth_cmd->parsed()) {
      auto file = load_config(sy.config);
      auto ch = synth::channel_config_from(file);
      if (sy_seed->count()) ch.seed = sy.seed;
      ch.validate();
      const auto g = Geometry::load(sy.geometry);
      const auto traj = synth::Trajectory::load(sy.trajectory);
      const auto rep = synth::gen_dataset(g, ch, traj, sy.out);
      fmt::print("snapshots={} links={} nlos_links={} glitches={}\n", rep.snapshots, rep.links, rep.nlos_links,
                 rep.glitch_indices.size());
      write_manifest(*synth_cmd, sy.out,
                     {{"seed", ch.seed},
                      {"config_text", materialize(ch)},
                      {"geometry_text", g.to_text()},
                      {"artifacts", {{"dataset", sy.out}}},
                      {"report",
                       {{"snapshots", rep.snapshots},
                        {"links", rep.links},
                        {"nlos_links", rep.nlos_links},
                        {"glitch_indices", rep.glitch_indices}}}});
      return kExitOk;
    }

    if (train_cmd->parsed()) {
      auto file = load_config(tr.config);
      const auto pre = cc::preprocess_config_from(file);
      auto tc = cc::train_config_from(file);
      if (tr_seed->count()) tc.seed = tr.seed;
      if (tr_epochs->count()) tc.epochs = tr.epochs;
      if (tr_threads->count()) tc.threads = tr.threads;
      tc.validate();
      const auto g = Geometry::load(tr.geometry);
      const auto set = cc::build_training_set(tr.dataset, g, pre);
      log::info("train", "event=training_set samples={} outliers={} no_peak={} alpha={}", set.samples.size(),
                set.outliers, set.no_peak, set.alpha);
      const auto res = cc::train(set, g, tc, [](const cc::EpochLog& l) {
        log::info("train", "event=epoch epoch={} train_mean={:.6f} probe_total={:.6f} tdoa={:.6f} disp={:.6f}",
                  l.epoch, l.train_mean, l.probe.total, l.probe.tdoa, l.probe.displacement);
      });
      cc::save_params(res.params, tr.out);
      const std::string loss = tr.loss_log.empty() ? tr.out + ".loss.csv" : tr.loss_log;
      cc::write_loss_log(res.log, loss);
      write_manifest(*train_cmd, tr.out,
                     {{"seed", tc.seed},
                      {"config_text", materialize(pre) + materialize(tc)},
                      {"geometry_text", g.to_text()},
                      {"artifacts", {{"weights", tr.out}, {"loss_log", loss}}}});
      return kExitOk;
    }

    if (ric_cmd->parsed()) {
      install_signals();
      ric::Ric server({rc.host, rc.agent_port, rc.xapp_port, rc.queue});
      server.start();
      const auto t0 = std::chrono::steady_clock::now();
      while (!g_stop) {
        std::this_thread::sleep_for(100ms);
        if (rc.duration > 0 && std::chrono::steady_clock::now() - t0 > std::chrono::duration<double>(rc.duration))
          break;
      }
      server.stop();
      return kExitOk;
    }

    if (agent_cmd->parsed()) {
      install_signals();
      agent::AgentConfig acfg;
      acfg.ric = net::Endpoint::parse(ag.ric);
      acfg.agent_id = ag.agent_id;
      acfg.ue_id = ag.ue_id;
      acfg.rate_hz = ag.rate;
      acfg.loop = ag.loop;
      acfg.max_sends = ag.max_sends;
      acfg.duration_s = ag.duration;
      agent::Agent a(acfg, ag.dataset);
      a.connect();
      if (!a.wait_for_subscription(std::chrono::milliseconds(static_cast<long>(ag.wait * 1000))))
        fail(Errc::not_subscribed, "no subscription within the wait period");
      const auto s = a.replay(&g_stop);
      fmt::print("sent={} duration_s={:.3f} connection_lost={}\n", s.sent, s.duration_s, s.connection_lost);
      return s.connection_lost ? kExitRuntime : kExitOk;
    }

    auto pipeline_config = [](const PipelineFlags& f) {
      xapp::PipelineConfig p;
      p.model_path = f.model;
      p.geometry = f.geometry;
      p.window = f.window;
      p.out_csv = f.out;
      p.preprocess = cc::preprocess_config_from(load_config(f.config));
      return p;
    };
    auto pipeline_manifest = [&](const CLI::App& sub, const xapp::PipelineConfig& p, const xapp::PipelineSummary& s) {
      write_manifest(sub, p.out_csv,
                     {{"config_text", materialize(p.preprocess)},
                      {"geometry_text", Geometry::load(p.geometry).to_text()},
                      {"artifacts", {{"predictions", p.out_csv}}},
                      {"report",
                       {{"indications", s.indications},
                        {"records", s.records},
                        {"outliers", s.outliers},
                        {"no_peak", s.no_peak}}}});
    };

    if (xapp_cmd->parsed()) {
      install_signals();
      auto p = pipeline_config(xf);
      p.ric = net::Endpoint::parse(xa.ric);
      p.request_id = xa.request_id;
      p.truth_dataset = xa.truth;
      p.max_records = xa.max_records;
      p.idle_timeout_s = xa.idle_timeout;
      const auto s = xapp::run_pipeline(p, &g_stop);
      fmt::print("indications={} records={} outliers={} no_peak={}\n", s.indications, s.records, s.outliers,
                 s.no_peak);
      pipeline_manifest(*xapp_cmd, p, s);
      return kExitOk;
    }

    if (infer_cmd->parsed()) {
      const auto p = pipeline_config(inf);
      const auto s = xapp::infer_offline(p, infer_dataset);
      fmt::print("indications={} records={} outliers={} no_peak={}\n", s.indications, s.records, s.outliers,
                 s.no_peak);
      pipeline_manifest(*infer_cmd, p, s);
      return kExitOk;
    }

    if (eval_cmd->parsed()) {
      const auto recs = xapp::read_predictions(ev.predictions);
      const auto stats =
          xapp::evaluate(recs, ev.group == "point" ? xapp::Grouping::point : xapp::Grouping::global, !ev.raw);
      fmt::print("{}", xapp::format_table(stats));
      if (!ev.out.empty()) {
        xapp::write_eval_csv(stats, ev.out);
        write_manifest(*eval_cmd, ev.out, {{"artifacts", {{"evaluation", ev.out}}}});
      }
      return kExitOk;
    }

    if (e2e_cmd->parsed()) {
      const auto p = pipeline_config(ef);
      E2eConfig c;
      c.dataset = ee.dataset;
      c.model = p.model_path;
      c.geometry = p.geometry;
      c.preprocess = p.preprocess;
      c.window = p.window;
      c.out_csv = p.out_csv;
      c.rate_hz = ee.rate;
      c.loop = ee.loop;
      c.duration_s = ee.duration;
      c.queue_capacity = ee.queue;
      const auto s = run_e2e(c);
      fmt::print("sent={} indications={} records={} outliers={} no_peak={} overflow_drops={} max_latency_us={:.1f}\n",
                 s.replay.sent, s.pipeline.indications, s.pipeline.records, s.pipeline.outliers, s.pipeline.no_peak,
                 s.ric.overflow_drops, s.pipeline.max_latency_us);
      pipeline_manifest(*e2e_cmd, p, s.pipeline);
      return kExitOk;
    }

    if (replay_cmd->parsed()) {
      std::ifstream f(manifest_path);
      require(f.good(), Errc::io_error, "cannot open " + manifest_path);
      json j;
      try {
        j = json::parse(f);
      } catch (const json::exception& e) {
        fail(Errc::config_error, std::string("bad manifest: ") + e.what());
      }
      require(j.contains("argv") && j["argv"].is_array(), Errc::config_error, "manifest has no argv");
      auto argv2 = j["argv"].get<std::vector<std::string>>();
      std::vector<std::string> temps;
      auto replace = [&](const std::string& flag, const std::string& value) {
        for (std::size_t i = 0; i + 1 < argv2.size(); ++i)
          if (argv2[i] == flag) {
            argv2[i + 1] = value;
            return;
          }
        argv2.push_back(flag);
        argv2.push_back(value);
      };
      if (j.contains("config_text")) {
        temps.push_back(temp_file("config", j["config_text"].get<std::string>()));
        replace("--config", temps.back());
      }
      if (j.contains("geometry_text")) {
        temps.push_back(temp_file("geometry", j["geometry_text"].get<std::string>()));
        replace("--geometry", temps.back());
      }
      if (!replay_out.empty()) replace("--out", replay_out);
      const int rc2 = dispatch(argv2);
      for (const auto& t : temps) std::filesystem::remove(t);
      return rc2;
    }
  } catch (const Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return e.code() == Errc::config_error ? kExitConfig : kExitRuntime;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace e2srs::cli
