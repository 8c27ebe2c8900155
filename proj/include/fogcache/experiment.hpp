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

/**
 * @file experiment.hpp
 * @brief Experiment configuration, single runs, baseline runs, parameter
 *        sweeps, and the CSV/manifest artifacts they produce.
 */

#ifndef FOGCACHE_EXPERIMENT_HPP
#define FOGCACHE_EXPERIMENT_HPP

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "fogcache/backing_store.hpp"
#include "fogcache/coherence.hpp"
#include "fogcache/metrics.hpp"
#include "fogcache/netsim.hpp"
#include "fogcache/workload.hpp"

namespace fogcache {

/// Invalid configuration; the message names the offending field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FogSettings {
  std::size_t n_nodes = 50;
  std::size_t cache_capacity = 200;
  double loss_probability = 0.1;
  DelayModel delay = DelayModel::constant(milliseconds(5));
  SimTime response_window = milliseconds(500);
  SimTime ping_timeout = seconds(5);
};

struct SweepAxis {
  std::string parameter;  // dotted config path, e.g. "fog.n_nodes"
  std::vector<nlohmann::json> values;
};

struct ExperimentConfig {
  FogSettings fog;
  StoreConfig store;
  RouterConfig router;
  WorkloadConfig workload;
  double warmup_fraction = 0.2;
  bool event_log = false;       // write events.csv next to the CSVs
  bool store_snapshot = false;  // write store.csv
  bool baseline = false;
  std::uint64_t seed = 1;
  std::vector<SweepAxis> sweep;
  std::string output_dir = "out";
};

/// Parses a config document. Missing fields keep their defaults; unknown
/// fields and type mismatches raise ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const ExperimentConfig& config);

/// Sets `path=value` in a config document. The value is parsed as JSON when
/// possible and taken as a string otherwise.
void apply_override(nlohmann::json& doc, std::string_view assignment);

/// Reads a JSON config (comments allowed), applies overrides, validates.
ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

/// One config per sweep point (cartesian product of the axes, first axis
/// slowest); point i runs with seed + i.
std::vector<ExperimentConfig> expand_sweep(const ExperimentConfig& config);

std::string config_hash(const ExperimentConfig& config);

struct RunResult {
  ExperimentConfig config;
  MetricsReport steady;  // warm-up excluded
  MetricsReport whole;   // entire run
  MetricsReport rtt;     // lossless round-trip probe
  std::uint64_t event_digest = 0;
  std::size_t event_count = 0;
  std::string events_csv;  // filled only when config.event_log is set
  std::string store_csv;   // filled only when config.store_snapshot is set
  RouterStats router;
  WorkloadStats workload;
  std::vector<SimTime> store_calls;
  bool rate_limit_respected = true;
  std::size_t store_rows = 0;
  std::uint64_t store_rows_overwritten = 0;
  std::uint64_t orphan_responses = 0;
  std::size_t uncommitted_rows = 0;
  std::uint64_t unaccounted_lines = 0;  // neither stored, queued nor counted as dropped
  SimTime horizon;
  Tally recount_check;  // batch recount of the raw log
  bool counters_consistent = true;
};

RunResult run_simulation(const ExperimentConfig& config);

/// Round-trip probe on a lossless fog of the configured size: node 0 pings
/// every peer, and the router times a full-table read of an empty store.
MetricsReport measure_rtt(const ExperimentConfig& config, int rounds = 5);

/// Writes rtt/bandwidth/missratio/txsize CSVs (prefixed for baseline runs)
/// and manifest.json into `dir`.
void write_run_artifacts(const RunResult& result, const std::filesystem::path& dir);

struct SweepOutcome {
  std::vector<RunResult> points;
};

/// Runs every sweep point (on up to `jobs` threads) and writes per-point
/// artifacts under dir/point_NNN plus combined CSVs in dir. On failure the
/// finished points and an error manifest are kept and the error rethrown.
SweepOutcome run_sweep(const ExperimentConfig& config, unsigned jobs, const std::filesystem::path& dir);

/// Combined CSV text for one figure across runs.
std::string figure_csv(Figure f, const std::vector<RunResult>& runs);

std::string_view code_version();

/// Writes a gnuplot script for each figure CSV present in `dir` and returns
/// a plain-text summary table of their contents.
std::string emit_plots(const std::filesystem::path& dir);

}  // namespace fogcache

#endif  // FOGCACHE_EXPERIMENT_HPP
