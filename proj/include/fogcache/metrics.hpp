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
 * @file metrics.hpp
 * @brief Timestamped event log, incremental counters, and the derived
 *        experiment report (miss ratio, WAN/LAN rates, transaction sizes,
 *        round-trip times, complete-loss rate).
 */

#ifndef FOGCACHE_METRICS_HPP
#define FOGCACHE_METRICS_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fogcache/sim_time.hpp"

namespace fogcache {

/// Source id used for events emitted by the router (WAN side).
inline constexpr NodeId kRouterSource = 0xFFFFFFFFu;

enum class EventKind : std::uint8_t {
  Generate,
  AnnounceSent,       // value = surviving deliveries
  AnnounceDelivered,  // source = receiver
  AnnounceLost,       // source = receiver
  ReadLocalHit,
  ReadFogHit,         // value = responses collected
  ReadMiss,
  ReadSkipped,
  StoreWriteOk,       // value = rows in the call
  StoreRateLimited,
  StoreReadAll,       // value = rows transferred
  PingRTT,            // value = rtt in ms, -1 for an incomplete round
  QueueDepth,         // value = router queue depth
  BytesLAN,           // bytes = charged bytes, value = wire size of one copy
  BytesWAN,
};

inline constexpr std::size_t kEventKinds = 15;

std::string_view kind_name(EventKind kind);

struct Event {
  SimTime time;
  NodeId source = 0;
  EventKind kind = EventKind::Generate;
  std::uint64_t bytes = 0;
  std::uint64_t detail = 0;  // key low 64 bits or request id
  std::int64_t value = 0;
};

struct RttAccumulator {
  std::uint64_t samples = 0;
  std::uint64_t incomplete = 0;
  std::int64_t min_ms = 0;
  std::int64_t max_ms = 0;
  std::int64_t sum_ms = 0;

  void add(std::int64_t value_ms);
  bool operator==(const RttAccumulator&) const = default;
};

/// Running totals over a sequence of events.
struct Tally {
  std::array<std::uint64_t, kEventKinds> count{};
  std::array<std::uint64_t, kEventKinds> bytes{};
  std::array<std::int64_t, kEventKinds> value_sum{};
  std::uint64_t complete_losses = 0;  // AnnounceSent with zero deliveries
  RttAccumulator fog_rtt;
  RttAccumulator store_rtt;

  void add(const Event& e);
  std::uint64_t of(EventKind k) const { return count[static_cast<std::size_t>(k)]; }
  std::uint64_t bytes_of(EventKind k) const { return bytes[static_cast<std::size_t>(k)]; }
  std::int64_t value_of(EventKind k) const { return value_sum[static_cast<std::size_t>(k)]; }
  bool operator==(const Tally&) const = default;
};

/// Append-only event log. Events from one source must arrive in
/// non-decreasing time order.
class EventLog {
 public:
  /// Appends `e`; throws std::invalid_argument if `e` is older than the
  /// last event recorded for the same source.
  void record(const Event& e);

  const std::vector<Event>& events() const { return events_; }
  const Tally& totals() const { return totals_; }
  std::size_t size() const { return events_.size(); }
  bool empty() const { return events_.empty(); }

  /// FNV-1a 64 over the CSV serialization of the log.
  std::uint64_t digest() const;
  void write_csv(std::ostream& os) const;

 private:
  std::vector<Event> events_;
  Tally totals_;
  std::unordered_map<NodeId, SimTime> last_time_;
};

/// Batch recomputation of totals from raw events.
Tally recount(std::span<const Event> events);

/// Half-open interval [begin, end) of simulation time.
struct Window {
  SimTime begin;
  SimTime end;
};

struct RttStats {
  std::uint64_t samples = 0;
  std::uint64_t incomplete = 0;
  double min_s = 0.0;
  double mean_s = 0.0;
  double max_s = 0.0;
};

struct MetricsReport {
  bool empty = true;  // no events fell inside the window
  Window window;

  std::uint64_t reads_local = 0;
  std::uint64_t reads_fog = 0;
  std::uint64_t reads_miss = 0;
  std::uint64_t reads_skipped = 0;
  std::uint64_t generates = 0;
  std::uint64_t announces = 0;
  std::uint64_t store_writes_ok = 0;
  std::uint64_t store_reads = 0;
  std::uint64_t store_rate_limited = 0;
  std::uint64_t wan_bytes = 0;
  std::uint64_t lan_bytes = 0;
  std::uint64_t lan_messages = 0;

  double miss_ratio = 0.0;
  double backing_fraction = 0.0;
  double wan_bytes_per_sec = 0.0;
  double lan_bytes_per_sec = 0.0;
  double mean_wan_transaction_bytes = 0.0;
  double mean_local_transaction_bytes = 0.0;
  double local_transactions_per_sec = 0.0;  // reads served inside the fog
  double complete_loss_rate = 0.0;
  RttStats rtt_fog;
  RttStats rtt_store;
};

MetricsReport summarize(const Tally& tally, Window window);

/// Report over `window`, or over [0, last event] when no window is given.
MetricsReport report(const EventLog& log, std::optional<Window> window = std::nullopt);

// -- CSV export -------------------------------------------------------------

enum class Figure { Rtt, Bandwidth, MissRatio, TxSize };

struct SeriesPoint {
  std::int64_t x = 0;  // n_nodes or cache_size depending on the figure
  MetricsReport report;
};

std::string_view figure_filename(Figure f);
std::string_view figure_header(Figure f);

/// CSV text for one figure, fixed decimal formatting.
std::string format_csv(Figure f, std::span<const SeriesPoint> points);

/// Writes format_csv() to `path`; throws std::runtime_error if the file
/// cannot be written.
void export_csv(Figure f, std::span<const SeriesPoint> points, const std::filesystem::path& path);

}  // namespace fogcache

#endif  // FOGCACHE_METRICS_HPP
