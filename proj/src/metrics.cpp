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

#include "fogcache/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fogcache {

namespace {

constexpr std::array<std::string_view, kEventKinds> kKindNames = {
    "Generate",   "AnnounceSent",  "AnnounceDelivered", "AnnounceLost", "ReadLocalHit",
    "ReadFogHit", "ReadMiss",      "ReadSkipped",       "StoreWriteOk", "StoreRateLimited",
    "StoreReadAll", "PingRTT",     "QueueDepth",        "BytesLAN",     "BytesWAN",
};

std::size_t index_of(EventKind k) { return static_cast<std::size_t>(k); }

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

RttStats to_stats(const RttAccumulator& acc) {
  RttStats s;
  s.samples = acc.samples;
  s.incomplete = acc.incomplete;
  if (acc.samples > 0) {
    s.min_s = static_cast<double>(acc.min_ms) / 1000.0;
    s.max_s = static_cast<double>(acc.max_ms) / 1000.0;
    s.mean_s = static_cast<double>(acc.sum_ms) / 1000.0 / static_cast<double>(acc.samples);
  }
  return s;
}

std::string format_line(const Event& e) {
  char buf[160];
  const char* source = e.source == kRouterSource ? "router" : nullptr;
  const auto name = kind_name(e.kind);
  int n;
  if (source != nullptr) {
    n = std::snprintf(buf, sizeof buf, "%lld,%s,%.*s,%llu,%llu,%lld\n", static_cast<long long>(e.time.ms()), source,
                      static_cast<int>(name.size()), name.data(), static_cast<unsigned long long>(e.bytes),
                      static_cast<unsigned long long>(e.detail), static_cast<long long>(e.value));
  } else {
    n = std::snprintf(buf, sizeof buf, "%lld,%u,%.*s,%llu,%llu,%lld\n", static_cast<long long>(e.time.ms()), e.source,
                      static_cast<int>(name.size()), name.data(), static_cast<unsigned long long>(e.bytes),
                      static_cast<unsigned long long>(e.detail), static_cast<long long>(e.value));
  }
  return std::string(buf, static_cast<std::size_t>(n));
}

}  // namespace

std::string_view kind_name(EventKind kind) { return kKindNames.at(index_of(kind)); }

void RttAccumulator::add(std::int64_t value_ms) {
  if (value_ms < 0) {
    ++incomplete;
    return;
  }
  if (samples == 0) {
    min_ms = max_ms = value_ms;
  } else {
    min_ms = std::min(min_ms, value_ms);
    max_ms = std::max(max_ms, value_ms);
  }
  sum_ms += value_ms;
  ++samples;
}

void Tally::add(const Event& e) {
  const auto i = index_of(e.kind);
  ++count[i];
  bytes[i] += e.bytes;
  value_sum[i] += e.value;
  if (e.kind == EventKind::AnnounceSent && e.value == 0) ++complete_losses;
  if (e.kind == EventKind::PingRTT) (e.source == kRouterSource ? store_rtt : fog_rtt).add(e.value);
}

void EventLog::record(const Event& e) {
  auto [it, inserted] = last_time_.try_emplace(e.source, e.time);
  if (!inserted) {
    if (e.time < it->second)
      throw std::invalid_argument("out-of-order event for source " + std::to_string(e.source) + ": " +
                                  std::to_string(e.time.ms()) + " ms after " + std::to_string(it->second.ms()) + " ms");
    it->second = e.time;
  }
  events_.push_back(e);
  totals_.add(e);
}

std::uint64_t EventLog::digest() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& e : events_) {
    for (unsigned char c : format_line(e)) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

void EventLog::write_csv(std::ostream& os) const {
  os << "time_ms,source,kind,bytes,detail,value\n";
  for (const auto& e : events_) os << format_line(e);
}

Tally recount(std::span<const Event> events) {
  Tally t;
  for (const auto& e : events) t.add(e);
  return t;
}

MetricsReport summarize(const Tally& tally, Window window) {
  MetricsReport r;
  r.window = window;
  std::uint64_t total = 0;
  for (auto c : tally.count) total += c;
  r.empty = total == 0;

  r.reads_local = tally.of(EventKind::ReadLocalHit);
  r.reads_fog = tally.of(EventKind::ReadFogHit);
  r.reads_miss = tally.of(EventKind::ReadMiss);
  r.reads_skipped = tally.of(EventKind::ReadSkipped);
  r.generates = tally.of(EventKind::Generate);
  r.announces = tally.of(EventKind::AnnounceSent);
  r.store_writes_ok = tally.of(EventKind::StoreWriteOk);
  r.store_reads = tally.of(EventKind::StoreReadAll);
  r.store_rate_limited = tally.of(EventKind::StoreRateLimited);
  r.wan_bytes = tally.bytes_of(EventKind::BytesWAN);
  r.lan_bytes = tally.bytes_of(EventKind::BytesLAN);
  r.lan_messages = tally.of(EventKind::BytesLAN);

  const double reads = static_cast<double>(r.reads_local + r.reads_fog + r.reads_miss);
  const double span_s = (window.end - window.begin).seconds();
  r.miss_ratio = ratio(static_cast<double>(r.reads_miss), reads);
  r.backing_fraction = ratio(static_cast<double>(r.reads_miss + r.store_writes_ok), reads + static_cast<double>(r.generates));
  r.wan_bytes_per_sec = ratio(static_cast<double>(r.wan_bytes), span_s);
  r.lan_bytes_per_sec = ratio(static_cast<double>(r.lan_bytes), span_s);
  r.mean_wan_transaction_bytes =
      ratio(static_cast<double>(r.wan_bytes), static_cast<double>(r.store_writes_ok + r.store_reads + r.store_rate_limited));
  r.mean_local_transaction_bytes =
      ratio(static_cast<double>(tally.value_of(EventKind::BytesLAN)), static_cast<double>(r.lan_messages));
  r.local_transactions_per_sec = ratio(static_cast<double>(r.reads_local + r.reads_fog), span_s);
  r.complete_loss_rate = ratio(static_cast<double>(tally.complete_losses), static_cast<double>(r.announces));
  r.rtt_fog = to_stats(tally.fog_rtt);
  r.rtt_store = to_stats(tally.store_rtt);
  return r;
}

MetricsReport report(const EventLog& log, std::optional<Window> window) {
  if (!window) {
    const SimTime last = log.empty() ? SimTime{} : log.events().back().time;
    return summarize(log.totals(), Window{SimTime{}, last});
  }
  Tally t;
  for (const auto& e : log.events())
    if (e.time >= window->begin && e.time < window->end) t.add(e);
  return summarize(t, *window);
}

std::string_view figure_filename(Figure f) {
  switch (f) {
    case Figure::Rtt: return "rtt.csv";
    case Figure::Bandwidth: return "bandwidth.csv";
    case Figure::MissRatio: return "missratio.csv";
    case Figure::TxSize: return "txsize.csv";
  }
  return "unknown.csv";
}

std::string_view figure_header(Figure f) {
  switch (f) {
    case Figure::Rtt: return "n_nodes,rtt_fog_s,rtt_store_s";
    case Figure::Bandwidth: return "cache_size,wan_bytes_per_s,lan_bytes_per_s";
    case Figure::MissRatio: return "n_nodes,miss_ratio,backing_fraction";
    case Figure::TxSize: return "cache_size,mean_wan_tx_bytes,mean_local_tx_bytes";
  }
  return "";
}

std::string format_csv(Figure f, std::span<const SeriesPoint> points) {
  std::string out(figure_header(f));
  out += '\n';
  char buf[128];
  for (const auto& p : points) {
    const auto& r = p.report;
    const auto x = static_cast<long long>(p.x);
    switch (f) {
      case Figure::Rtt:
        std::snprintf(buf, sizeof buf, "%lld,%.6f,%.6f\n", x, r.rtt_fog.mean_s, r.rtt_store.mean_s);
        break;
      case Figure::Bandwidth:
        std::snprintf(buf, sizeof buf, "%lld,%.3f,%.3f\n", x, r.wan_bytes_per_sec, r.lan_bytes_per_sec);
        break;
      case Figure::MissRatio:
        std::snprintf(buf, sizeof buf, "%lld,%.6f,%.6f\n", x, r.miss_ratio, r.backing_fraction);
        break;
      case Figure::TxSize:
        std::snprintf(buf, sizeof buf, "%lld,%.3f,%.3f\n", x, r.mean_wan_transaction_bytes,
                      r.mean_local_transaction_bytes);
        break;
    }
    out += buf;
  }
  return out;
}

void export_csv(Figure f, std::span<const SeriesPoint> points, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << format_csv(f, points);
  os.flush();
  if (!os) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace fogcache
