/*
 * Copyright 2026 The fogcache Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "fogcache/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>

#ifndef FOGCACHE_VERSION
#define FOGCACHE_VERSION "dev"
#endif

namespace fogcache {

using nlohmann::json;

namespace {

// Field reader that rejects unknown keys and type mismatches.
class Fields {
 public:
  Fields(const json& obj, std::string prefix) : obj_(obj), prefix_(std::move(prefix)) {
    if (!obj_.is_object()) throw ConfigError("'" + (prefix_.empty() ? std::string("<root>") : prefix_) + "' must be an object");
  }

  std::string path(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

  const json* get(const std::string& key) {
    used_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  template <typename Int>
  void uint(const std::string& key, Int& out) {
    if (const json* v = get(key)) {
      if (!v->is_number_integer() || (v->is_number_integer() && v->get<std::int64_t>() < 0 && !v->is_number_unsigned()))
        throw ConfigError("'" + path(key) + "' must be a non-negative integer");
      out = static_cast<Int>(v->get<std::uint64_t>());
    }
  }

  void real(const std::string& key, double& out) {
    if (const json* v = get(key)) {
      if (!v->is_number()) throw ConfigError("'" + path(key) + "' must be a number");
      out = v->get<double>();
      if (!std::isfinite(out)) throw ConfigError("'" + path(key) + "' must be finite");
    }
  }

  void flag(const std::string& key, bool& out) {
    if (const json* v = get(key)) {
      if (!v->is_boolean()) throw ConfigError("'" + path(key) + "' must be true or false");
      out = v->get<bool>();
    }
  }

  void text(const std::string& key, std::string& out) {
    if (const json* v = get(key)) {
      if (!v->is_string()) throw ConfigError("'" + path(key) + "' must be a string");
      out = v->get<std::string>();
    }
  }

  void secs(const std::string& key, SimTime& out) {
    double s = out.seconds();
    real(key, s);
    if (s < 0.0) throw ConfigError("'" + path(key) + "' must not be negative");
    out = SimTime::from_seconds(s);
  }

  void finish() const {
    for (const auto& [key, value] : obj_.items())
      if (!used_.contains(key)) throw ConfigError("unknown field '" + path(key) + "'");
  }

 private:
  const json& obj_;
  std::string prefix_;
  std::set<std::string> used_;
};

void parse_delay(const json& j, DelayModel& out) {
  Fields f(j, "fog.delay");
  std::string kind = out.kind == DelayModel::Kind::Constant ? "constant" : "uniform";
  f.text("kind", kind);
  if (kind == "constant") {
    std::int64_t ms = out.lo.ms();
    f.uint("ms", ms);
    out = DelayModel::constant(milliseconds(ms));
  } else if (kind == "uniform") {
    std::int64_t lo = out.lo.ms();
    std::int64_t hi = out.hi.ms();
    f.uint("min_ms", lo);
    f.uint("max_ms", hi);
    if (hi < lo) throw ConfigError("'fog.delay.max_ms' must be >= 'fog.delay.min_ms'");
    out = DelayModel::uniform(milliseconds(lo), milliseconds(hi));
  } else {
    throw ConfigError("'fog.delay.kind' must be \"constant\" or \"uniform\"");
  }
  f.finish();
}

void validate(const ExperimentConfig& c) {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (c.fog.n_nodes < 1) fail("'fog.n_nodes' must be at least 1");
  if (c.fog.n_nodes >= (1u << 24)) fail("'fog.n_nodes' must be below 2^24");
  if (c.fog.cache_capacity < 1) fail("'fog.cache_capacity' must be at least 1");
  if (!(c.fog.loss_probability >= 0.0 && c.fog.loss_probability <= 1.0)) fail("'fog.loss_probability' must lie in [0, 1]");
  if (c.fog.response_window <= c.fog.delay.max() * 2)
    fail("'fog.response_window_s' must exceed twice the maximum one-way delay");
  if (c.fog.ping_timeout <= SimTime{}) fail("'fog.ping_timeout_s' must be positive");
  if (c.store.rate_limit_calls < 1) fail("'store.rate_limit_calls' must be at least 1");
  if (c.store.rate_window <= SimTime{}) fail("'store.rate_window_s' must be positive");
  if (!(c.store.throughput_bytes_per_sec > 0.0)) fail("'store.throughput_bytes_per_s' must be positive");
  if (c.router.backoff_base <= SimTime{}) fail("'router.backoff_base_s' must be positive");
  if (c.router.backoff_cap < c.router.backoff_base) fail("'router.backoff_cap_s' must be >= 'router.backoff_base_s'");
  if (c.router.queue_capacity < 1) fail("'router.queue_capacity' must be at least 1");
  if (c.router.batch_max < 1) fail("'router.batch_max' must be at least 1");
  if (c.workload.write_period <= SimTime{}) fail("'workload.write_period_s' must be positive");
  if (c.workload.read_period <= SimTime{}) fail("'workload.read_period_s' must be positive");
  if (c.workload.duration < c.workload.read_period * 10)
    fail("'workload.duration_s' must cover at least 10 read periods");
  if (c.workload.recency_window && *c.workload.recency_window == 0) fail("'workload.recency_window' must be positive");
  if (!(c.workload.update_fraction >= 0.0 && c.workload.update_fraction <= 1.0))
    fail("'workload.update_fraction' must lie in [0, 1]");
  if (!(c.warmup_fraction >= 0.0 && c.warmup_fraction < 1.0)) fail("'metrics.warmup_fraction' must lie in [0, 1)");
  for (const auto& axis : c.sweep)
    if (axis.values.empty()) fail("sweep axis '" + axis.parameter + "' has no values");
}

json* find_path(json& doc, std::string_view path) {
  json* cur = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string part(path.substr(start, dot == std::string_view::npos ? std::string_view::npos : dot - start));
    if (!cur->is_object() || !cur->contains(part)) return nullptr;
    cur = &(*cur)[part];
    if (dot == std::string_view::npos) return cur;
    start = dot + 1;
  }
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

json report_json(const MetricsReport& r) {
  return json{{"window_begin_s", r.window.begin.seconds()},
              {"window_end_s", r.window.end.seconds()},
              {"miss_ratio", r.miss_ratio},
              {"backing_fraction", r.backing_fraction},
              {"wan_bytes_per_sec", r.wan_bytes_per_sec},
              {"lan_bytes_per_sec", r.lan_bytes_per_sec},
              {"mean_wan_transaction_bytes", r.mean_wan_transaction_bytes},
              {"mean_local_transaction_bytes", r.mean_local_transaction_bytes},
              {"local_transactions_per_sec", r.local_transactions_per_sec},
              {"complete_loss_rate", r.complete_loss_rate},
              {"reads_local", r.reads_local},
              {"reads_fog", r.reads_fog},
              {"reads_miss", r.reads_miss},
              {"reads_skipped", r.reads_skipped},
              {"generates", r.generates},
              {"store_writes_ok", r.store_writes_ok},
              {"store_reads", r.store_reads},
              {"store_rate_limited", r.store_rate_limited},
              {"wan_bytes", r.wan_bytes},
              {"lan_bytes", r.lan_bytes}};
}

std::int64_t figure_x(Figure f, const ExperimentConfig& c) {
  return static_cast<std::int64_t>(f == Figure::Rtt || f == Figure::MissRatio ? c.fog.n_nodes : c.fog.cache_capacity);
}

std::string prefix_for(const ExperimentConfig& c) { return c.baseline ? "baseline_" : ""; }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
  if (!os) throw std::runtime_error("write failed for " + path.string());
}

constexpr Figure kFigures[] = {Figure::Rtt, Figure::Bandwidth, Figure::MissRatio, Figure::TxSize};

}  // namespace

std::string_view code_version() { return FOGCACHE_VERSION; }

ExperimentConfig config_from_json(const json& doc) {
  ExperimentConfig c;
  Fields root(doc, "");
  root.uint("seed", c.seed);
  root.text("output_dir", c.output_dir);
  root.flag("baseline", c.baseline);

  if (const json* j = root.get("fog")) {
    Fields f(*j, "fog");
    f.uint("n_nodes", c.fog.n_nodes);
    f.uint("cache_capacity", c.fog.cache_capacity);
    f.real("loss_probability", c.fog.loss_probability);
    if (const json* d = f.get("delay")) parse_delay(*d, c.fog.delay);
    f.secs("response_window_s", c.fog.response_window);
    f.secs("ping_timeout_s", c.fog.ping_timeout);
    f.finish();
  }
  if (const json* j = root.get("store")) {
    Fields f(*j, "store");
    f.uint("rate_limit_calls", c.store.rate_limit_calls);
    f.secs("rate_window_s", c.store.rate_window);
    f.secs("write_latency_s", c.store.write_latency);
    f.secs("read_latency_s", c.store.read_latency);
    f.secs("collision_window_s", c.store.collision_window);
    f.real("throughput_bytes_per_s", c.store.throughput_bytes_per_sec);
    f.uint("header_bytes", c.store.header_bytes);
    f.uint("rate_limited_overhead_bytes", c.store.rate_limited_overhead_bytes);
    f.finish();
  }
  if (const json* j = root.get("router")) {
    Fields f(*j, "router");
    f.secs("backoff_base_s", c.router.backoff_base);
    f.secs("backoff_cap_s", c.router.backoff_cap);
    f.uint("queue_capacity", c.router.queue_capacity);
    f.uint("batch_max", c.router.batch_max);
    f.flag("avoid_collisions", c.router.avoid_collisions);
    f.finish();
  }
  if (const json* j = root.get("workload")) {
    Fields f(*j, "workload");
    f.secs("write_period_s", c.workload.write_period);
    f.secs("read_period_s", c.workload.read_period);
    f.uint("payload_size", c.workload.payload_size);
    f.secs("duration_s", c.workload.duration);
    std::string choice = c.workload.key_choice == KeyChoice::Uniform ? "uniform" : "recency";
    f.text("key_choice", choice);
    if (choice == "recency")
      c.workload.key_choice = KeyChoice::RecencyWeighted;
    else if (choice == "uniform")
      c.workload.key_choice = KeyChoice::Uniform;
    else
      throw ConfigError("'workload.key_choice' must be \"recency\" or \"uniform\"");
    if (const json* w = f.get("recency_window")) {
      if (w->is_null()) {
        c.workload.recency_window.reset();
      } else if (w->is_number_unsigned()) {
        c.workload.recency_window = w->get<std::size_t>();
      } else {
        throw ConfigError("'workload.recency_window' must be null or a non-negative integer");
      }
    }
    std::string phase = c.workload.phase == PhaseMode::Synchronized ? "synchronized" : "staggered";
    f.text("phase", phase);
    if (phase == "staggered")
      c.workload.phase = PhaseMode::Staggered;
    else if (phase == "synchronized")
      c.workload.phase = PhaseMode::Synchronized;
    else
      throw ConfigError("'workload.phase' must be \"staggered\" or \"synchronized\"");
    f.real("update_fraction", c.workload.update_fraction);
    f.finish();
  }
  if (const json* j = root.get("metrics")) {
    Fields f(*j, "metrics");
    f.real("warmup_fraction", c.warmup_fraction);
    f.flag("event_log", c.event_log);
    f.flag("store_snapshot", c.store_snapshot);
    f.finish();
  }
  if (const json* j = root.get("sweep")) {
    if (!j->is_array()) throw ConfigError("'sweep' must be an array");
    const json defaults = config_to_json(ExperimentConfig{});
    for (std::size_t i = 0; i < j->size(); ++i) {
      Fields f((*j)[i], "sweep[" + std::to_string(i) + "]");
      SweepAxis axis;
      f.text("parameter", axis.parameter);
      if (axis.parameter.empty()) throw ConfigError("'sweep[" + std::to_string(i) + "].parameter' is required");
      json probe = defaults;
      json* target = find_path(probe, axis.parameter);
      if (target == nullptr || target->is_object())
        throw ConfigError("sweep parameter '" + axis.parameter + "' does not name a config field");
      if (const json* v = f.get("values")) {
        if (!v->is_array()) throw ConfigError("'sweep[" + std::to_string(i) + "].values' must be an array");
        axis.values.assign(v->begin(), v->end());
      }
      f.finish();
      c.sweep.push_back(std::move(axis));
    }
  }
  root.finish();
  validate(c);
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json delay = c.fog.delay.kind == DelayModel::Kind::Constant
                   ? json{{"kind", "constant"}, {"ms", c.fog.delay.lo.ms()}}
                   : json{{"kind", "uniform"}, {"min_ms", c.fog.delay.lo.ms()}, {"max_ms", c.fog.delay.hi.ms()}};
  json sweep = json::array();
  for (const auto& axis : c.sweep) sweep.push_back(json{{"parameter", axis.parameter}, {"values", axis.values}});
  return json{
      {"seed", c.seed},
      {"output_dir", c.output_dir},
      {"baseline", c.baseline},
      {"fog",
       {{"n_nodes", c.fog.n_nodes},
        {"cache_capacity", c.fog.cache_capacity},
        {"loss_probability", c.fog.loss_probability},
        {"delay", delay},
        {"response_window_s", c.fog.response_window.seconds()},
        {"ping_timeout_s", c.fog.ping_timeout.seconds()}}},
      {"store",
       {{"rate_limit_calls", c.store.rate_limit_calls},
        {"rate_window_s", c.store.rate_window.seconds()},
        {"write_latency_s", c.store.write_latency.seconds()},
        {"read_latency_s", c.store.read_latency.seconds()},
        {"collision_window_s", c.store.collision_window.seconds()},
        {"throughput_bytes_per_s", c.store.throughput_bytes_per_sec},
        {"header_bytes", c.store.header_bytes},
        {"rate_limited_overhead_bytes", c.store.rate_limited_overhead_bytes}}},
      {"router",
       {{"backoff_base_s", c.router.backoff_base.seconds()},
        {"backoff_cap_s", c.router.backoff_cap.seconds()},
        {"queue_capacity", c.router.queue_capacity},
        {"batch_max", c.router.batch_max},
        {"avoid_collisions", c.router.avoid_collisions}}},
      {"workload",
       {{"write_period_s", c.workload.write_period.seconds()},
        {"read_period_s", c.workload.read_period.seconds()},
        {"payload_size", c.workload.payload_size},
        {"duration_s", c.workload.duration.seconds()},
        {"key_choice", c.workload.key_choice == KeyChoice::Uniform ? "uniform" : "recency"},
        {"recency_window", c.workload.recency_window ? json(*c.workload.recency_window) : json(nullptr)},
        {"phase", c.workload.phase == PhaseMode::Synchronized ? "synchronized" : "staggered"},
        {"update_fraction", c.workload.update_fraction}}},
      {"metrics",
       {{"warmup_fraction", c.warmup_fraction}, {"event_log", c.event_log}, {"store_snapshot", c.store_snapshot}}},
      {"sweep", sweep},
  };
}

void apply_override(json& doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0)
    throw ConfigError("override '" + std::string(assignment) + "' must have the form key=value");
  const std::string path(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  json* cur = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string part = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("override path '" + path + "' has an empty component");
    if (!cur->is_object()) {
      if (!cur->is_null()) throw ConfigError("override path '" + path + "' crosses a non-object field");
      *cur = json::object();
    }
    if (dot == std::string::npos) {
      (*cur)[part] = value;
      return;
    }
    cur = &(*cur)[part];
    start = dot + 1;
  }
}

ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  json doc = json::object();
  if (!path.empty()) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read config file " + path.string());
    try {
      doc = json::parse(is, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
      throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
    }
  }
  for (const auto& o : overrides) apply_override(doc, o);
  return config_from_json(doc);
}

std::vector<ExperimentConfig> expand_sweep(const ExperimentConfig& config) {
  if (config.sweep.empty()) throw ConfigError("sweep list is empty");
  json base = config_to_json(config);
  base["sweep"] = json::array();

  std::vector<std::size_t> idx(config.sweep.size(), 0);
  std::vector<ExperimentConfig> points;
  while (true) {
    json doc = base;
    for (std::size_t a = 0; a < config.sweep.size(); ++a) {
      json* target = find_path(doc, config.sweep[a].parameter);
      if (target == nullptr) throw ConfigError("sweep parameter '" + config.sweep[a].parameter + "' does not exist");
      *target = config.sweep[a].values[idx[a]];
    }
    ExperimentConfig point;
    try {
      point = config_from_json(doc);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("sweep point ") + std::to_string(points.size()) + ": " + e.what());
    }
    point.seed = config.seed + points.size();
    points.push_back(std::move(point));

    std::size_t a = config.sweep.size();
    while (a > 0) {
      --a;
      if (++idx[a] < config.sweep[a].values.size()) break;
      idx[a] = 0;
      if (a == 0) return points;
    }
  }
}

std::string config_hash(const ExperimentConfig& config) {
  const std::string dump = config_to_json(config).dump();
  const auto digest = murmur3_x64_128(std::span(reinterpret_cast<const std::uint8_t*>(dump.data()), dump.size()));
  return to_hex(digest);
}

MetricsReport measure_rtt(const ExperimentConfig& config, int rounds) {
  Scheduler sched;
  EventLog log;
  BroadcastMedium medium(sched, config.fog.n_nodes, 0.0, config.fog.delay, derive_seed(config.seed, 4));
  SheetStore store(config.store);
  Router router(sched, store, log, config.router);
  CoherenceConfig cc{config.fog.cache_capacity, config.fog.response_window, config.fog.ping_timeout, FogMode::Cached};
  Fog fog(sched, medium, log, &router, cc);

  const SimTime spacing = config.fog.ping_timeout + seconds(1);
  const SimTime store_spacing = store.read_time(store.table_bytes()) + seconds(1);
  const SimTime step = std::max(spacing, store_spacing);
  for (int i = 0; i < rounds; ++i) {
    sched.schedule(step * i, [&fog, &router] {
      if (fog.size() >= 2) fog.node(0).ping_round();
      router.probe_store();
    });
  }
  sched.run();
  return report(log);
}

RunResult run_simulation(const ExperimentConfig& config) {
  validate(config);
  Scheduler sched;
  EventLog log;
  BroadcastMedium medium(sched, config.fog.n_nodes, config.fog.loss_probability, config.fog.delay,
                         derive_seed(config.seed, 1));
  SheetStore store(config.store);
  Router router(sched, store, log, config.router);
  CoherenceConfig cc{config.fog.cache_capacity, config.fog.response_window, config.fog.ping_timeout,
                     config.baseline ? FogMode::Baseline : FogMode::Cached};
  Fog fog(sched, medium, log, &router, cc);
  WorkloadDriver driver(fog, config.workload, derive_seed(config.seed, 2), derive_seed(config.seed, 3));
  driver.start();
  const SimTime horizon = driver.horizon();
  sched.run_until(horizon);
  store.advance_to(horizon);

  RunResult r;
  r.config = config;
  r.horizon = horizon;
  const SimTime warmup = SimTime::from_seconds(config.workload.duration.seconds() * config.warmup_fraction);
  r.steady = report(log, Window{warmup, horizon});
  r.whole = report(log);
  r.rtt = measure_rtt(config);
  r.event_digest = log.digest();
  r.event_count = log.size();
  if (config.event_log) {
    std::ostringstream os;
    log.write_csv(os);
    r.events_csv = os.str();
  }
  r.router = router.stats();
  r.workload = driver.stats();
  r.store_calls = store.accepted_calls();
  r.rate_limit_respected = rate_window_respected(r.store_calls, config.store.rate_limit_calls, config.store.rate_window);
  r.store_rows = store.rows().size();
  r.store_rows_overwritten = store.rows_overwritten();
  r.orphan_responses = fog.orphan_responses();
  r.recount_check = recount(log.events());
  r.counters_consistent = r.recount_check == log.totals();

  const auto pending = router.uncommitted();
  r.uncommitted_rows = pending.size();
  std::unordered_map<CacheKey, SimTime, CacheKeyHash> in_flight;
  for (const auto& l : pending) {
    auto [it, fresh] = in_flight.try_emplace(l.key, l.data_timestamp);
    if (!fresh) it->second = std::max(it->second, l.data_timestamp);
  }
  for (const auto& [key, ts] : driver.latest_versions()) {
    if (auto row = store.find(key); row && row->data_timestamp >= ts) continue;
    if (auto it = in_flight.find(key); it != in_flight.end() && it->second >= ts) continue;
    ++r.unaccounted_lines;
  }
  if (config.store_snapshot) {
    std::ostringstream os;
    store.export_csv(os);
    r.store_csv = os.str();
  }
  return r;
}

std::string figure_csv(Figure f, const std::vector<RunResult>& runs) {
  std::vector<SeriesPoint> pts;
  pts.reserve(runs.size());
  for (const auto& r : runs) pts.push_back({figure_x(f, r.config), f == Figure::Rtt ? r.rtt : r.steady});
  return format_csv(f, pts);
}

void write_run_artifacts(const RunResult& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::string prefix = prefix_for(r.config);
  json files = json::array();
  for (Figure f : kFigures) {
    const std::string name = prefix + std::string(figure_filename(f));
    SeriesPoint p{figure_x(f, r.config), f == Figure::Rtt ? r.rtt : r.steady};
    export_csv(f, std::span(&p, 1), dir / name);
    files.push_back(name);
  }
  if (r.config.event_log) {
    write_text(dir / (prefix + "events.csv"), r.events_csv);
    files.push_back(prefix + "events.csv");
  }
  if (r.config.store_snapshot) {
    write_text(dir / (prefix + "store.csv"), r.store_csv);
    files.push_back(prefix + "store.csv");
  }

  json manifest{
      {"tool", "fogcache"},
      {"code_version", std::string(code_version())},
      {"mode", r.config.baseline ? "baseline" : "cached"},
      {"seed", r.config.seed},
      {"config_hash", config_hash(r.config)},
      {"config", config_to_json(r.config)},
      {"files", files},
      {"horizon_s", r.horizon.seconds()},
      {"steady_state", report_json(r.steady)},
      {"whole_run", report_json(r.whole)},
      {"rtt", {{"fog_mean_s", r.rtt.rtt_fog.mean_s}, {"store_mean_s", r.rtt.rtt_store.mean_s}}},
      {"totals",
       {{"events", r.event_count},
        {"event_digest", hex64(r.event_digest)},
        {"writes", r.workload.writes},
        {"updates", r.workload.updates},
        {"reads_scheduled", r.workload.reads_scheduled},
        {"reads_skipped", r.workload.reads_skipped},
        {"store_rows", r.store_rows},
        {"store_rows_overwritten", r.store_rows_overwritten},
        {"store_calls_accepted", r.store_calls.size()},
        {"router_max_queue_depth", r.router.max_queue_depth},
        {"router_dropped", r.router.dropped},
        {"router_rate_limited", r.router.calls_rate_limited},
        {"uncommitted_rows", r.uncommitted_rows},
        {"unaccounted_lines", r.unaccounted_lines},
        {"orphan_responses", r.orphan_responses}}},
      {"checks", {{"rate_limit_respected", r.rate_limit_respected}, {"counters_consistent", r.counters_consistent}}},
  };
  write_text(dir / (prefix + "manifest.json"), manifest.dump(2) + "\n");
}

SweepOutcome run_sweep(const ExperimentConfig& config, unsigned jobs, const std::filesystem::path& dir) {
  const auto configs = expand_sweep(config);
  std::vector<std::optional<RunResult>> results(configs.size());
  std::vector<std::string> errors(configs.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};

  auto worker = [&] {
    while (!failed.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= configs.size()) return;
      try {
        results[i] = run_simulation(configs[i]);
      } catch (const std::exception& e) {
        errors[i] = e.what();
        failed.store(true);
      }
    }
  };
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(configs.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::filesystem::create_directories(dir);
  json points = json::array();
  SweepOutcome out;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "point_%03zu", i);
    json entry{{"index", i}, {"dir", name}, {"seed", configs[i].seed}, {"config_hash", config_hash(configs[i])}};
    json values = json::object();
    const json doc = config_to_json(configs[i]);
    for (const auto& axis : config.sweep) {
      json copy = doc;
      if (const json* v = find_path(copy, axis.parameter)) values[axis.parameter] = *v;
    }
    entry["values"] = values;
    if (results[i]) {
      write_run_artifacts(*results[i], dir / name);
      entry["status"] = "ok";
    } else {
      entry["status"] = errors[i].empty() ? "not run" : "error";
      if (!errors[i].empty()) entry["error"] = errors[i];
    }
    points.push_back(entry);
  }

  json manifest{{"tool", "fogcache"},
                {"code_version", std::string(code_version())},
                {"mode", config.baseline ? "baseline" : "cached"},
                {"base_seed", config.seed},
                {"config_hash", config_hash(config)},
                {"config", config_to_json(config)},
                {"points", points}};

  if (failed.load()) {
    std::string first;
    for (const auto& e : errors)
      if (!e.empty()) {
        first = e;
        break;
      }
    manifest["status"] = "error";
    manifest["error"] = first;
    write_text(dir / "sweep_manifest.json", manifest.dump(2) + "\n");
    throw std::runtime_error("sweep aborted: " + first);
  }

  for (auto& r : results) out.points.push_back(std::move(*r));
  json files = json::array();
  const std::string prefix = prefix_for(config);
  for (Figure f : kFigures) {
    const std::string name = prefix + std::string(figure_filename(f));
    write_text(dir / name, figure_csv(f, out.points));
    files.push_back(name);
  }
  manifest["status"] = "ok";
  manifest["files"] = files;
  write_text(dir / "sweep_manifest.json", manifest.dump(2) + "\n");
  return out;
}

std::string emit_plots(const std::filesystem::path& dir) {
  std::ostringstream summary;
  for (const std::string prefix : {"", "baseline_"}) {
    for (Figure f : kFigures) {
      const std::string csv = prefix + std::string(figure_filename(f));
      const auto path = dir / csv;
      if (!std::filesystem::exists(path)) continue;
      const std::string stem = path.stem().string();
      std::ostringstream gp;
      gp << "set datafile separator ','\n"
         << "set terminal pngcairo size 800,500\n"
         << "set output '" << stem << ".png'\n"
         << "set key autotitle columnhead\n"
         << "set grid\n";
      if (f == Figure::Rtt) gp << "set logscale y\n";
      gp << "plot '" << csv << "' using 1:2 with linespoints, '' using 1:3 with linespoints\n";
      write_text(dir / (stem + ".gp"), gp.str());

      std::ifstream is(path);
      summary << "== " << csv << " ==\n";
      std::string line;
      while (std::getline(is, line)) {
        std::string row;
        std::stringstream cells(line);
        std::string cell;
        while (std::getline(cells, cell, ',')) {
          char buf[32];
          std::snprintf(buf, sizeof buf, "%20s", cell.c_str());
          row += buf;
        }
        summary << row << '\n';
      }
    }
  }
  return summary.str();
}

}  // namespace fogcache
