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
 * @file backing_store.hpp
 * @brief Mock spreadsheet-style cloud store and the single queued writer
 *        (router) that carries all WAN traffic for the fog.
 *
 * Store semantics:
 *  - reads always return the whole table; there is no server-side query
 *  - at most `rate_limit_calls` accepted calls in any rolling window
 *  - a write whose commit lands within `collision_window` of the previous
 *    commit takes over the previous write's row slots (last one wins)
 *
 * The router owns a FIFO of pending rows (coalesced by key) and a list of
 * pending full-table reads, and issues one store call at a time. Rate-limited
 * calls are retried after base * 2^(attempt-1), capped.
 */

#ifndef FOGCACHE_BACKING_STORE_HPP
#define FOGCACHE_BACKING_STORE_HPP

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <list>
#include <optional>
#include <ostream>
#include <span>
#include <unordered_map>
#include <vector>

#include "fogcache/cache_core.hpp"
#include "fogcache/metrics.hpp"
#include "fogcache/netsim.hpp"

namespace fogcache {

struct StoreConfig {
  std::uint32_t rate_limit_calls = 500;
  SimTime rate_window = seconds(100);
  SimTime write_latency = milliseconds(300);
  SimTime read_latency = milliseconds(500);
  SimTime collision_window = milliseconds(500);
  double throughput_bytes_per_sec = 1.0e6;
  std::uint64_t header_bytes = 64;
  std::uint64_t rate_limited_overhead_bytes = 512;
};

enum class CallStatus { Ok, RateLimited };

struct WriteReceipt {
  CallStatus status = CallStatus::Ok;
  SimTime commit_at;
  std::uint64_t bytes = 0;
};

struct ReadReceipt {
  CallStatus status = CallStatus::Ok;
  std::vector<CacheLine> rows;
  std::uint64_t bytes = 0;
  SimTime complete_at;
};

class SheetStore {
 public:
  explicit SheetStore(StoreConfig config);

  /// One API call writing `rows`. Rows become visible at now + write
  /// latency and are upserted by key.
  WriteReceipt write(std::span<const CacheLine> rows, SimTime now);
  WriteReceipt write(const CacheLine& row, SimTime now) { return write(std::span<const CacheLine>(&row, 1), now); }

  /// One API call returning every committed row.
  ReadReceipt read_all(SimTime now);

  /// Applies writes whose commit time is <= now.
  void advance_to(SimTime now);

  std::optional<CacheLine> find(const CacheKey& key) const;
  const std::vector<CacheLine>& rows() const { return rows_; }
  /// Bytes a full-table read transfers right now: header + encoded rows.
  std::uint64_t table_bytes() const { return config_.header_bytes + row_bytes_; }
  /// Read latency model: fixed latency plus transfer time, rounded up to ms.
  SimTime read_time(std::uint64_t bytes) const;

  const std::vector<SimTime>& accepted_calls() const { return accepted_; }
  const std::vector<SimTime>& rejected_calls() const { return rejected_; }
  std::uint64_t rows_overwritten() const { return rows_overwritten_; }
  const StoreConfig& config() const { return config_; }

  /// Snapshot as CSV: key_hex,valid,time_inserted,data_timestamp,origin_node,payload_hex
  void export_csv(std::ostream& os) const;

 private:
  struct PendingCommit {
    SimTime at;
    std::vector<CacheLine> rows;
  };

  bool admit(SimTime now);
  void apply(PendingCommit& commit);

  StoreConfig config_;
  std::deque<PendingCommit> pending_;
  std::vector<CacheLine> rows_;
  std::unordered_map<CacheKey, std::size_t, CacheKeyHash> index_;
  std::uint64_t row_bytes_ = 0;
  std::deque<SimTime> window_;
  std::vector<SimTime> accepted_;
  std::vector<SimTime> rejected_;
  std::uint64_t rows_overwritten_ = 0;

  bool has_last_commit_ = false;
  SimTime last_commit_at_;
  std::size_t last_first_slot_ = 0;
  std::size_t last_slot_count_ = 0;
};

/// True if every half-open window [t, t + window) holds at most `limit`
/// of the (sorted) call times.
bool rate_window_respected(std::span<const SimTime> calls, std::uint32_t limit, SimTime window);

struct RouterConfig {
  SimTime backoff_base = seconds(1);
  SimTime backoff_cap = seconds(64);
  std::size_t queue_capacity = 100000;
  std::size_t batch_max = 500;
  bool avoid_collisions = true;
};

struct RouterStats {
  std::uint64_t enqueued = 0;
  std::uint64_t coalesced = 0;
  std::uint64_t dropped = 0;
  std::uint64_t calls_ok = 0;
  std::uint64_t calls_rate_limited = 0;
  std::uint64_t rows_committed = 0;
  std::uint64_t reads_served = 0;
  std::size_t max_queue_depth = 0;
};

class Router {
 public:
  using ReadCallback = std::function<void(std::optional<CacheLine>)>;
  using CommitListener = std::function<void(const CacheLine&)>;
  using ProbeCallback = std::function<void(SimTime rtt)>;

  Router(Scheduler& scheduler, SheetStore& store, EventLog& log, RouterConfig config);
  Router(const Router&) = delete;
  Router& operator=(const Router&) = delete;

  /// Queues `line` for persistence. A queued older version of the same key
  /// is replaced and the entry moves to the tail.
  void enqueue(CacheLine line);

  /// Full-table read on behalf of `requester`, scanned for `key`.
  void read_miss(NodeId requester, const CacheKey& key, ReadCallback done);

  /// Full-table read used as a store round-trip sample; logged as PingRTT
  /// from the router.
  void probe_store(ProbeCallback done = {});

  void set_commit_listener(CommitListener listener) { on_commit_ = std::move(listener); }

  std::size_t queue_depth() const { return queue_.size(); }
  std::size_t pending_reads() const { return reads_.size(); }
  bool idle() const { return !armed_; }
  unsigned consecutive_failures() const { return attempts_; }
  const RouterStats& stats() const { return stats_; }
  const RouterConfig& config() const { return config_; }

  /// Rows not yet committed: queued plus in flight.
  std::vector<CacheLine> uncommitted() const;

 private:
  enum class Op { Write, Read };

  struct ReadWaiter {
    NodeId requester;
    CacheKey key;
    ReadCallback done;
    ProbeCallback probe;
    SimTime requested;
  };

  void kick();
  void issue();
  void issue_write();
  void issue_read();
  void rate_limited(Op op);
  void wan(EventKind kind, std::uint64_t bytes, std::int64_t value);
  void push_back(CacheLine line);

  Scheduler& scheduler_;
  SheetStore& store_;
  EventLog& log_;
  RouterConfig config_;
  CommitListener on_commit_;

  std::list<CacheLine> queue_;
  std::unordered_map<CacheKey, std::list<CacheLine>::iterator, CacheKeyHash> queued_;
  std::vector<CacheLine> inflight_;
  std::deque<ReadWaiter> reads_;

  bool armed_ = false;  // a call, backoff timer or paced issue is outstanding
  unsigned attempts_ = 0;
  std::optional<Op> retry_;
  Op last_op_ = Op::Read;
  bool has_last_commit_ = false;
  SimTime last_commit_;
  RouterStats stats_;
};

}  // namespace fogcache

#endif  // FOGCACHE_BACKING_STORE_HPP
