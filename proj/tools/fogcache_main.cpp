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

// Command-line front end: run, sweep, baseline, plot.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "fogcache/experiment.hpp"

namespace {

struct Common {
  std::string config;
  std::vector<std::string> overrides;
  std::string out;
  long long seed = -1;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config, "JSON config file (comments allowed)");
  cmd->add_option("-s,--seed", c.seed, "Base RNG seed")->check(CLI::NonNegativeNumber);
  cmd->add_option("-o,--out", c.out, "Output directory");
  cmd->add_option("--override", c.overrides, "key.path=value, may be repeated")->take_all();
}

fogcache::ExperimentConfig resolve(const Common& c) {
  auto overrides = c.overrides;
  if (c.seed >= 0) overrides.push_back("seed=" + std::to_string(c.seed));
  if (!c.out.empty()) overrides.push_back("output_dir=\"" + c.out + "\"");
  return fogcache::load_config(c.config, overrides);
}

void print_report(const fogcache::RunResult& r) {
  const auto& s = r.steady;
  std::printf("mode                %s\n", r.config.baseline ? "baseline" : "cached");
  std::printf("nodes               %zu\n", r.config.fog.n_nodes);
  std::printf("cache capacity      %zu\n", r.config.fog.cache_capacity);
  std::printf("miss ratio          %.6f\n", s.miss_ratio);
  std::printf("backing fraction    %.6f\n", s.backing_fraction);
  std::printf("WAN bytes/s         %.3f\n", s.wan_bytes_per_sec);
  std::printf("LAN bytes/s         %.3f\n", s.lan_bytes_per_sec);
  std::printf("fog RTT (s)         %.6f\n", r.rtt.rtt_fog.mean_s);
  std::printf("store RTT (s)       %.6f\n", r.rtt.rtt_store.mean_s);
  std::printf("rate limit held     %s\n", r.rate_limit_respected ? "yes" : "no");
  std::printf("event digest        %016llx\n", static_cast<unsigned long long>(r.event_digest));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic simulator for a fog-level cache with soft coherence"};
  app.set_version_flag("--version", std::string(fogcache::code_version()));
  app.require_subcommand(1);

  Common run_opts;
  Common base_opts;
  Common sweep_opts;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  std::string plot_dir = "out";

  auto* run = app.add_subcommand("run", "Single simulation run");
  add_common(run, run_opts);
  auto* baseline = app.add_subcommand("baseline", "Single run with caching disabled");
  add_common(baseline, base_opts);
  auto* sweep = app.add_subcommand("sweep", "Run every point of the configured sweep");
  add_common(sweep, sweep_opts);
  sweep->add_option("-j,--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  auto* plot = app.add_subcommand("plot", "Write gnuplot scripts for CSVs in a directory");
  plot->add_option("dir", plot_dir, "Directory holding the CSVs");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed() || baseline->parsed()) {
      auto cfg = resolve(run->parsed() ? run_opts : base_opts);
      if (baseline->parsed()) cfg.baseline = true;
      cfg.sweep.clear();
      const auto result = fogcache::run_simulation(cfg);
      fogcache::write_run_artifacts(result, cfg.output_dir);
      print_report(result);
      std::printf("artifacts           %s\n", cfg.output_dir.c_str());
    } else if (sweep->parsed()) {
      const auto cfg = resolve(sweep_opts);
      const auto outcome = fogcache::run_sweep(cfg, jobs, cfg.output_dir);
      std::printf("%zu sweep points written to %s\n", outcome.points.size(), cfg.output_dir.c_str());
    } else if (plot->parsed()) {
      if (!std::filesystem::is_directory(plot_dir)) {
        std::fprintf(stderr, "error: %s is not a directory\n", plot_dir.c_str());
        return 2;
      }
      std::fputs(fogcache::emit_plots(plot_dir).c_str(), stdout);
    }
  } catch (const fogcache::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
