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

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"

#include "fogcache/experiment.hpp"

using namespace fogcache;
using nlohmann::json;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

ExperimentConfig small(std::size_t n = 5, std::int64_t duration_s = 150) {
  ExperimentConfig c;
  c.fog.n_nodes = n;
  c.fog.cache_capacity = 50;
  c.workload.duration = seconds(duration_s);
  return c;
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("fogcache_test_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("defaults round-trip through json") {
  const ExperimentConfig c;
  const json doc = config_to_json(c);
  const ExperimentConfig back = config_from_json(doc);
  CHECK(config_to_json(back) == doc);
  CHECK(back.fog.n_nodes == 50);
  CHECK(back.fog.cache_capacity == 200);
  CHECK(back.workload.duration == seconds(600));
  CHECK(back.store.rate_limit_calls == 500);
  CHECK(config_hash(back) == config_hash(c));
}

TEST_CASE("unknown fields and type mismatches name the field") {
  auto err = [](const json& doc) {
    try {
      config_from_json(doc);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(err(json{{"fog", {{"n_nodez", 3}}}}).find("fog.n_nodez") != std::string::npos);
  CHECK(err(json{{"fog", {{"n_nodes", "many"}}}}).find("fog.n_nodes") != std::string::npos);
  CHECK(err(json{{"fog", {{"n_nodes", -1}}}}).find("fog.n_nodes") != std::string::npos);
  CHECK(err(json{{"fog", {{"loss_probability", 2.0}}}}).find("fog.loss_probability") != std::string::npos);
  CHECK(err(json{{"workload", {{"phase", "random"}}}}).find("workload.phase") != std::string::npos);
  CHECK(err(json{{"workload", {{"duration_s", 20}}}}).find("workload.duration_s") != std::string::npos);
  CHECK(err(json{{"fog", {{"delay", {{"kind", "constant"}, {"ms", 400}}}}}}).find("response_window_s") !=
        std::string::npos);
  CHECK(err(json{{"sweep", {{{"parameter", "fog.bogus"}, {"values", {1}}}}}}).find("fog.bogus") != std::string::npos);
  CHECK(err(json{{"sweep", {{{"parameter", "fog.n_nodes"}, {"values", json::array()}}}}}).find("no values") !=
        std::string::npos);
  CHECK(err(json::array()) != "");
}

TEST_CASE("overrides set nested values and parse json literals") {
  json doc = json::object();
  apply_override(doc, "fog.n_nodes=7");
  apply_override(doc, "workload.key_choice=uniform");
  apply_override(doc, "workload.recency_window=400");
  apply_override(doc, "baseline=true");
  const auto c = config_from_json(doc);
  CHECK(c.fog.n_nodes == 7);
  CHECK(c.workload.key_choice == KeyChoice::Uniform);
  CHECK(c.workload.recency_window == 400u);
  CHECK(c.baseline);
  CHECK_THROWS_AS(apply_override(doc, "novalue"), ConfigError);
  CHECK_THROWS_AS(apply_override(doc, "fog.n_nodes.x=1"), ConfigError);
}

TEST_CASE("load_config accepts comments and applies overrides") {
  const auto dir = scratch("load");
  std::filesystem::create_directories(dir);
  {
    std::ofstream os(dir / "c.jsonc");
    os << "{\n  // fog size\n  \"fog\": {\"n_nodes\": 12},\n  /* block */ \"seed\": 4\n}\n";
  }
  const auto c = load_config(dir / "c.jsonc", {"seed=9"});
  CHECK(c.fog.n_nodes == 12);
  CHECK(c.seed == 9);
  CHECK_THROWS_AS(load_config(dir / "absent.json"), ConfigError);
  {
    std::ofstream os(dir / "bad.json");
    os << "{ \"fog\": ";
  }
  CHECK_THROWS_AS(load_config(dir / "bad.json"), ConfigError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("sweep expansion is a cartesian product with seed + index") {
  ExperimentConfig c;
  c.seed = 100;
  CHECK_THROWS_AS(expand_sweep(c), ConfigError);
  c.sweep.push_back({"fog.n_nodes", {5, 10}});
  c.sweep.push_back({"fog.cache_capacity", {50, 100, 200}});
  const auto pts = expand_sweep(c);
  REQUIRE(pts.size() == 6);
  CHECK(pts[0].fog.n_nodes == 5);
  CHECK(pts[0].fog.cache_capacity == 50);
  CHECK(pts[2].fog.cache_capacity == 200);
  CHECK(pts[3].fog.n_nodes == 10);
  CHECK(pts[5].seed == 105);
  for (const auto& p : pts) CHECK(p.sweep.empty());

  ExperimentConfig bad;
  bad.sweep.push_back({"fog.n_nodes", {5, "ten"}});
  CHECK_THROWS_AS(expand_sweep(bad), ConfigError);
}

TEST_CASE("a run is internally consistent") {
  auto c = small(6, 200);
  c.fog.loss_probability = 0.2;
  c.workload.update_fraction = 0.1;
  const auto r = run_simulation(c);
  CHECK(r.counters_consistent);
  CHECK(r.rate_limit_respected);
  CHECK(r.unaccounted_lines == 0);
  CHECK(r.router.dropped == 0);
  const auto& s = r.whole;
  CHECK(s.reads_local + s.reads_fog + s.reads_miss + s.reads_skipped == r.workload.reads_scheduled);
  for (double v : {s.miss_ratio, s.backing_fraction, s.complete_loss_rate}) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  CHECK(s.wan_bytes == r.recount_check.bytes_of(EventKind::StoreWriteOk) +
                           r.recount_check.bytes_of(EventKind::StoreReadAll) +
                           r.recount_check.bytes_of(EventKind::StoreRateLimited));
  CHECK(r.rtt.rtt_fog.mean_s == doctest::Approx(0.010));
}

TEST_CASE("WAN bytes only come from the router") {
  auto c = small(4, 150);
  c.event_log = true;
  const auto r = run_simulation(c);
  std::istringstream is(r.events_csv);
  std::string line;
  std::getline(is, line);
  std::size_t wan_lines = 0;
  while (std::getline(is, line)) {
    if (line.find(",BytesWAN,") == std::string::npos) continue;
    ++wan_lines;
    CHECK(line.find(",router,BytesWAN,") != std::string::npos);
  }
  CHECK(wan_lines > 0);
}

TEST_CASE("a single-node fog misses every non-local read") {
  auto c = small(1, 150);
  c.fog.cache_capacity = 1;
  c.workload.key_choice = KeyChoice::Uniform;
  const auto r = run_simulation(c);
  CHECK(r.whole.reads_fog == 0);
  CHECK(r.whole.reads_miss > 0);
  CHECK(r.whole.reads_local + r.whole.reads_miss == r.workload.reads_issued);
}

TEST_CASE("baseline runs send every read to the store") {
  auto c = small(5, 150);
  c.baseline = true;
  const auto r = run_simulation(c);
  CHECK(r.whole.miss_ratio == 1.0);
  CHECK(r.whole.lan_bytes == 0);
  CHECK(r.rate_limit_respected);
  CHECK(r.unaccounted_lines == 0);
}

TEST_CASE("same seed gives identical artifacts; a new seed differs") {
  auto c = small(5, 150);
  c.event_log = true;
  c.store_snapshot = true;
  const auto a = run_simulation(c);
  const auto b = run_simulation(c);
  CHECK(a.events_csv == b.events_csv);
  CHECK(a.store_csv == b.store_csv);
  CHECK(a.event_digest == b.event_digest);
  c.seed = 2;
  CHECK(run_simulation(c).event_digest != a.event_digest);
}

TEST_CASE("run artifacts include csvs and a manifest that reproduces them") {
  const auto dir = scratch("artifacts");
  auto c = small(5, 150);
  c.event_log = true;
  const auto r = run_simulation(c);
  write_run_artifacts(r, dir);
  for (const char* f : {"rtt.csv", "bandwidth.csv", "missratio.csv", "txsize.csv", "events.csv", "manifest.json"})
    CHECK(std::filesystem::exists(dir / f));
  const json m = json::parse(slurp(dir / "manifest.json"));
  CHECK(m["seed"] == 1);
  CHECK(m["config_hash"] == config_hash(c));
  CHECK(m["code_version"] == std::string(code_version()));
  const auto replay = run_simulation(config_from_json(m["config"]));
  const auto dir2 = scratch("artifacts2");
  write_run_artifacts(replay, dir2);
  for (const char* f : {"rtt.csv", "bandwidth.csv", "missratio.csv", "txsize.csv", "events.csv", "manifest.json"})
    CHECK(slurp(dir / f) == slurp(dir2 / f));

  auto base = c;
  base.baseline = true;
  write_run_artifacts(run_simulation(base), dir);
  CHECK(std::filesystem::exists(dir / "baseline_missratio.csv"));
  CHECK(std::filesystem::exists(dir / "baseline_manifest.json"));
  std::filesystem::remove_all(dir);
  std::filesystem::remove_all(dir2);
}

TEST_CASE("parallel and serial sweeps agree") {
  auto c = small(5, 150);
  c.sweep.push_back({"fog.n_nodes", {2, 4, 6}});
  const auto d1 = scratch("sweep1");
  const auto d3 = scratch("sweep3");
  const auto serial = run_sweep(c, 1, d1);
  const auto parallel = run_sweep(c, 3, d3);
  REQUIRE(serial.points.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(serial.points[i].event_digest == parallel.points[i].event_digest);
  CHECK(slurp(d1 / "missratio.csv") == slurp(d3 / "missratio.csv"));
  const std::string combined = slurp(d1 / "missratio.csv");
  CHECK(std::count(combined.begin(), combined.end(), '\n') == 4);
  CHECK(std::filesystem::exists(d1 / "point_002" / "manifest.json"));
  CHECK(json::parse(slurp(d1 / "sweep_manifest.json"))["status"] == "ok");
  std::filesystem::remove_all(d1);
  std::filesystem::remove_all(d3);
}

TEST_CASE("invalid sweep points are rejected before any run") {
  auto c = small(5, 150);
  c.sweep.push_back({"fog.cache_capacity", {10, 0}});
  const auto dir = scratch("sweepfail");
  CHECK_THROWS_AS(run_sweep(c, 1, dir), ConfigError);
  CHECK_FALSE(std::filesystem::exists(dir / "sweep_manifest.json"));
}

TEST_CASE("plot emission writes gnuplot scripts for present csvs") {
  const auto dir = scratch("plot");
  write_run_artifacts(run_simulation(small(3, 150)), dir);
  const std::string summary = emit_plots(dir);
  CHECK(std::filesystem::exists(dir / "rtt.gp"));
  CHECK(std::filesystem::exists(dir / "missratio.gp"));
  CHECK_FALSE(std::filesystem::exists(dir / "baseline_rtt.gp"));
  CHECK(summary.find("missratio.csv") != std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("shipped configs load, and the annotated default matches the built-in defaults") {
  const std::filesystem::path dir = FOGCACHE_SOURCE_DIR "/configs";
  CHECK(config_to_json(load_config(dir / "default.jsonc")) == config_to_json(ExperimentConfig{}));
  for (const char* name : {"missratio.jsonc", "cachesize.jsonc", "rtt.jsonc", "smoke.jsonc"}) {
    CAPTURE(name);
    const auto c = load_config(dir / name);
    CHECK_FALSE(expand_sweep(c).empty());
  }
}
