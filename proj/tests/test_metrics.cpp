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

#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"

#include "fogcache/coherence.hpp"
#include "fogcache/metrics.hpp"
#include "oracles.hpp"

using namespace fogcache;

namespace {

Event ev(std::int64_t ms, NodeId src, EventKind k, std::uint64_t bytes = 0, std::int64_t value = 0) {
  return Event{milliseconds(ms), src, k, bytes, 0, value};
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace

TEST_CASE("record appends and enforces per-source order") {
  EventLog log;
  log.record(ev(10, 1, EventKind::Generate));
  CHECK(log.size() == 1);
  log.record(ev(10, 1, EventKind::AnnounceSent));
  CHECK(log.size() == 2);
  CHECK(log.events()[0].kind == EventKind::Generate);
  CHECK(log.events()[1].kind == EventKind::AnnounceSent);
  log.record(ev(5, 2, EventKind::Generate));  // other source may lag
  CHECK_THROWS_AS(log.record(ev(9, 1, EventKind::Generate)), std::invalid_argument);
  CHECK(log.size() == 3);
}

TEST_CASE("incremental counters equal a batch recount over 10^6 events") {
  EventLog log;
  std::mt19937_64 gen(1);
  std::vector<std::int64_t> clock(8, 0);
  for (int i = 0; i < 1000000; ++i) {
    const NodeId src = static_cast<NodeId>(gen() % 8);
    clock[src] += static_cast<std::int64_t>(gen() % 3);
    const auto kind = static_cast<EventKind>(gen() % kEventKinds);
    std::int64_t value = static_cast<std::int64_t>(gen() % 4);
    if (kind == EventKind::PingRTT && gen() % 5 == 0) value = -1;
    log.record(Event{milliseconds(clock[src]), src == 7 ? kRouterSource : src, kind, gen() % 1000, gen(), value});
  }
  CHECK(recount(log.events()) == log.totals());
}

TEST_CASE("miss ratio arithmetic") {
  EventLog log;
  for (int i = 0; i < 98; ++i) log.record(ev(i, 0, EventKind::ReadFogHit, 0, 1));
  log.record(ev(100, 0, EventKind::ReadMiss));
  log.record(ev(101, 0, EventKind::ReadMiss));
  const auto r = report(log);
  CHECK(r.miss_ratio == doctest::Approx(0.02));
  CHECK(r.reads_fog == 98);
  CHECK_FALSE(r.empty);
}

TEST_CASE("windowed report counts only events inside [begin, end)") {
  EventLog log;
  log.record(ev(0, 0, EventKind::ReadMiss));
  log.record(ev(1000, 0, EventKind::ReadLocalHit));
  log.record(ev(2000, 0, EventKind::ReadLocalHit));
  const auto r = report(log, Window{seconds(1), seconds(2)});
  CHECK(r.reads_local == 1);
  CHECK(r.reads_miss == 0);
  CHECK(r.miss_ratio == 0.0);
  const auto none = report(log, Window{seconds(50), seconds(60)});
  CHECK(none.empty);
}

TEST_CASE("rates, transaction sizes and rtt statistics") {
  EventLog log;
  log.record(ev(0, kRouterSource, EventKind::StoreWriteOk, 300, 2));
  log.record(ev(0, kRouterSource, EventKind::BytesWAN, 300));
  log.record(ev(500, kRouterSource, EventKind::StoreReadAll, 1000, 0));
  log.record(ev(500, kRouterSource, EventKind::BytesWAN, 1000));
  log.record(ev(600, kRouterSource, EventKind::StoreRateLimited, 512));
  log.record(ev(600, kRouterSource, EventKind::BytesWAN, 512));
  log.record(ev(700, kRouterSource, EventKind::PingRTT, 0, 501));
  log.record(ev(0, 1, EventKind::BytesLAN, 400, 100));
  log.record(ev(0, 1, EventKind::BytesLAN, 200, 50));
  log.record(ev(10, 1, EventKind::PingRTT, 0, 10));
  log.record(ev(20, 1, EventKind::PingRTT, 0, 30));
  log.record(ev(30, 1, EventKind::PingRTT, 0, -1));
  const auto r = summarize(log.totals(), Window{SimTime{}, seconds(2)});
  CHECK(r.wan_bytes == 1812);
  CHECK(r.wan_bytes_per_sec == doctest::Approx(906.0));
  CHECK(r.lan_bytes_per_sec == doctest::Approx(300.0));
  CHECK(r.mean_wan_transaction_bytes == doctest::Approx(604.0));
  CHECK(r.mean_local_transaction_bytes == doctest::Approx(75.0));
  CHECK(r.rtt_fog.samples == 2);
  CHECK(r.rtt_fog.incomplete == 1);
  CHECK(r.rtt_fog.mean_s == doctest::Approx(0.020));
  CHECK(r.rtt_fog.min_s == doctest::Approx(0.010));
  CHECK(r.rtt_fog.max_s == doctest::Approx(0.030));
  CHECK(r.rtt_store.mean_s == doctest::Approx(0.501));
  CHECK(r.backing_fraction == 0.0);  // no reads or generates in the log
}

TEST_CASE("complete loss rate over 10^4 announces tracks p^(N-1)") {
  Scheduler sched;
  EventLog log;
  const double p = 0.3;
  const std::size_t n = 10;
  BroadcastMedium medium(sched, n, p, DelayModel::constant(milliseconds(1)), 21);
  Fog fog(sched, medium, log, nullptr, CoherenceConfig{});
  for (int i = 0; i < 10000; ++i)
    sched.schedule(milliseconds(i), [&fog, i] { fog.node(static_cast<NodeId>(i % 10)).generate(Bytes(4, 0)); });
  sched.run();
  const auto r = report(log);
  CHECK(r.announces == 10000);
  const double exact = exact_complete_loss(p, n - 1);
  CHECK(std::abs(r.complete_loss_rate - exact) <= oracle::three_sigma(exact, 10000));
  CHECK(r.complete_loss_rate <= markov_loss_bound(p, n));
  CHECK(log.totals().of(EventKind::AnnounceLost) + log.totals().of(EventKind::AnnounceDelivered) == 10000u * (n - 1));
}

TEST_CASE("csv export has the documented headers and fixed formatting") {
  std::vector<SeriesPoint> pts;
  for (int n : {5, 10, 20, 50}) {
    SeriesPoint p;
    p.x = n;
    p.report.miss_ratio = 1.0 / n;
    p.report.backing_fraction = 0.05;
    pts.push_back(p);
  }
  const std::string csv = format_csv(Figure::MissRatio, pts);
  std::istringstream is(csv);
  std::string line;
  std::getline(is, line);
  CHECK(line == "n_nodes,miss_ratio,backing_fraction");
  int rows = 0;
  while (std::getline(is, line)) {
    const auto cells = split(line);
    REQUIRE(cells.size() == 3);
    CHECK(std::stoll(cells[0]) == pts[static_cast<std::size_t>(rows)].x);
    CHECK(std::abs(std::stod(cells[1]) - pts[static_cast<std::size_t>(rows)].report.miss_ratio) <= 5e-7);
    ++rows;
  }
  CHECK(rows == 4);
  CHECK(csv.find("5,0.200000,0.050000\n") != std::string::npos);
  CHECK(format_csv(Figure::MissRatio, pts) == csv);

  CHECK(figure_header(Figure::Rtt) == "n_nodes,rtt_fog_s,rtt_store_s");
  CHECK(figure_header(Figure::Bandwidth) == "cache_size,wan_bytes_per_s,lan_bytes_per_s");
  CHECK(figure_header(Figure::TxSize) == "cache_size,mean_wan_tx_bytes,mean_local_tx_bytes");
  CHECK(format_csv(Figure::Bandwidth, std::span(pts.data(), 1)) == "cache_size,wan_bytes_per_s,lan_bytes_per_s\n5,0.000,0.000\n");
}

TEST_CASE("export_csv writes the file and reports unwritable paths") {
  const auto dir = std::filesystem::temp_directory_path() / "fogcache_metrics_test";
  std::filesystem::create_directories(dir);
  SeriesPoint p;
  p.x = 50;
  export_csv(Figure::Rtt, std::span(&p, 1), dir / "rtt.csv");
  CHECK(std::filesystem::exists(dir / "rtt.csv"));
  CHECK_THROWS_AS(export_csv(Figure::Rtt, std::span(&p, 1), dir / "missing" / "x" / "rtt.csv"), std::runtime_error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("event log csv and digest are stable") {
  EventLog a, b;
  for (int i = 0; i < 100; ++i) {
    a.record(ev(i, static_cast<NodeId>(i % 3), EventKind::Generate, 8));
    b.record(ev(i, static_cast<NodeId>(i % 3), EventKind::Generate, 8));
  }
  CHECK(a.digest() == b.digest());
  b.record(ev(200, 0, EventKind::ReadMiss));
  CHECK(a.digest() != b.digest());
  std::ostringstream os;
  a.write_csv(os);
  CHECK(os.str().rfind("time_ms,source,kind,bytes,detail,value\n", 0) == 0);
  for (std::size_t k = 0; k < kEventKinds; ++k) CHECK_FALSE(kind_name(static_cast<EventKind>(k)).empty());
}
