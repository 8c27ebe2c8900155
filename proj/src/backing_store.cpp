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

#include "fogcache/backing_store.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace fogcache {

SheetStore::SheetStore(StoreConfig config) : config_(config) {
  if (config_.rate_limit_calls == 0) throw std::invalid_argument("rate limit must allow at least one call");
  if (config_.rate_window <= SimTime{}) throw std::invalid_argument("rate window must be positive");
  if (!(config_.throughput_bytes_per_sec > 0.0)) throw std::invalid_argument("store throughput must be positive");
}

bool SheetStore::admit(SimTime now) {
  while (!window_.empty() && window_.front() <= now - config_.rate_window) window_.pop_front();
  if (window_.size() >= config_.rate_limit_calls) {
    rejected_.push_back(now);
    return false;
  }
  window_.push_back(now);
  accepted_.push_back(now);
  return true;
}

WriteReceipt SheetStore::write(std::span<const CacheLine> rows, SimTime now) {
  advance_to(now);
  WriteReceipt receipt;
  if (!admit(now)) {
    receipt.status = CallStatus::RateLimited;
    receipt.commit_at = now;
    return receipt;
  }
  PendingCommit commit{now + config_.write_latency, {}};
  commit.rows.reserve(rows.size());
  for (const auto& r : rows) {
    receipt.bytes += encoded_line_size(r);
    commit.rows.push_back(r);
    commit.rows.back().dirty = false;
  }
  receipt.commit_at = commit.at;
  // Commits are kept sorted by time; equal latency keeps issue order.
  auto pos = std::upper_bound(pending_.begin(), pending_.end(), commit.at,
                              [](SimTime t, const PendingCommit& c) { return t < c.at; });
  pending_.insert(pos, std::move(commit));
  return receipt;
}

void SheetStore::advance_to(SimTime now) {
  while (!pending_.empty() && pending_.front().at <= now) {
    apply(pending_.front());
    pending_.pop_front();
  }
}

void SheetStore::apply(PendingCommit& commit) {
  std::vector<CacheLine> fresh;
  for (auto& row : commit.rows) {
    if (auto it = index_.find(row.key); it != index_.end()) {
      CacheLine& existing = rows_[it->second];
      if (!supersedes(existing, row)) {
        row_bytes_ -= encoded_line_size(existing);
        existing = std::move(row);
        row_bytes_ += encoded_line_size(existing);
      }
      continue;
    }
    auto dup = std::find_if(fresh.begin(), fresh.end(), [&](const CacheLine& f) { return f.key == row.key; });
    if (dup != fresh.end()) {
      if (!supersedes(*dup, row)) *dup = std::move(row);
      continue;
    }
    fresh.push_back(std::move(row));
  }

  std::size_t slot = rows_.size();
  if (has_last_commit_ && commit.at - last_commit_at_ < config_.collision_window) {
    // Contemporaneous write: start over the previous write's slots.
    slot = last_first_slot_;
  }
  const std::size_t first = slot;
  for (auto& row : fresh) {
    if (slot < rows_.size()) {
      CacheLine& victim = rows_[slot];
      index_.erase(victim.key);
      row_bytes_ -= encoded_line_size(victim);
      ++rows_overwritten_;
      victim = std::move(row);
    } else {
      rows_.push_back(std::move(row));
    }
    row_bytes_ += encoded_line_size(rows_[slot]);
    index_[rows_[slot].key] = slot;
    ++slot;
  }
  has_last_commit_ = true;
  last_commit_at_ = commit.at;
  last_first_slot_ = first;
  last_slot_count_ = fresh.size();
}

ReadReceipt SheetStore::read_all(SimTime now) {
  advance_to(now);
  ReadReceipt receipt;
  if (!admit(now)) {
    receipt.status = CallStatus::RateLimited;
    receipt.complete_at = now;
    return receipt;
  }
  receipt.rows = rows_;
  receipt.bytes = table_bytes();
  receipt.complete_at = now + read_time(receipt.bytes);
  return receipt;
}

SimTime SheetStore::read_time(std::uint64_t bytes) const {
  const double transfer_ms = static_cast<double>(bytes) * 1000.0 / config_.throughput_bytes_per_sec;
  return config_.read_latency + milliseconds(static_cast<std::int64_t>(std::ceil(transfer_ms)));
}

std::optional<CacheLine> SheetStore::find(const CacheKey& key) const {
  auto it = index_.find(key);
  if (it == index_.end()) return std::nullopt;
  return rows_[it->second];
}

void SheetStore::export_csv(std::ostream& os) const {
  os << "key_hex,valid,time_inserted,data_timestamp,origin_node,payload_hex\n";
  char buf[64];
  for (const auto& r : rows_) {
    std::snprintf(buf, sizeof buf, ",%d,%.3f,%.3f,%u,", r.valid ? 1 : 0, r.time_inserted.seconds(),
                  r.data_timestamp.seconds(), r.origin_node);
    os << r.key.hex() << buf << to_hex(r.payload) << '\n';
  }
}

bool rate_window_respected(std::span<const SimTime> calls, std::uint32_t limit, SimTime window) {
  // Two-pointer scan: every maximal window starts at some call.
  std::size_t hi = 0;
  for (std::size_t lo = 0; lo < calls.size(); ++lo) {
    if (hi < lo) hi = lo;
    while (hi < calls.size() && calls[hi] < calls[lo] + window) ++hi;
    if (hi - lo > limit) return false;
  }
  return true;
}

// -- Router -----------------------------------------------------------------

Router::Router(Scheduler& scheduler, SheetStore& store, EventLog& log, RouterConfig config)
    : scheduler_(scheduler), store_(store), log_(log), config_(config) {
  if (config_.batch_max == 0) throw std::invalid_argument("router batch_max must be at least 1");
  if (config_.queue_capacity == 0) throw std::invalid_argument("router queue capacity must be at least 1");
  if (config_.backoff_base <= SimTime{} || config_.backoff_cap < config_.backoff_base)
    throw std::invalid_argument("router backoff requires 0 < base <= cap");
}

void Router::push_back(CacheLine line) {
  queue_.push_back(std::move(line));
  queued_[queue_.back().key] = std::prev(queue_.end());
}

void Router::enqueue(CacheLine line) {
  line.dirty = false;
  ++stats_.enqueued;
  if (auto it = queued_.find(line.key); it != queued_.end()) {
    ++stats_.coalesced;
    if (!supersedes(line, *it->second)) return;
    queue_.erase(it->second);
    queued_.erase(it);
  } else {
    for (const auto& f : inflight_) {
      if (f.key == line.key && !supersedes(line, f)) {
        ++stats_.coalesced;
        return;
      }
    }
  }
  if (queue_.size() >= config_.queue_capacity) {
    queued_.erase(queue_.front().key);
    queue_.pop_front();
    ++stats_.dropped;
  }
  push_back(std::move(line));
  stats_.max_queue_depth = std::max(stats_.max_queue_depth, queue_.size());
  kick();
}

void Router::read_miss(NodeId requester, const CacheKey& key, ReadCallback done) {
  reads_.push_back(ReadWaiter{requester, key, std::move(done), {}, scheduler_.now()});
  kick();
}

void Router::probe_store(ProbeCallback done) {
  ReadWaiter w{kRouterSource, CacheKey{}, {}, std::move(done), scheduler_.now()};
  if (!w.probe) w.probe = [](SimTime) {};
  reads_.push_back(std::move(w));
  kick();
}

std::vector<CacheLine> Router::uncommitted() const {
  std::vector<CacheLine> out(inflight_.begin(), inflight_.end());
  out.insert(out.end(), queue_.begin(), queue_.end());
  return out;
}

void Router::kick() {
  if (armed_ || (queue_.empty() && reads_.empty())) return;
  armed_ = true;
  scheduler_.schedule(scheduler_.now(), [this] { issue(); });
}

void Router::wan(EventKind kind, std::uint64_t bytes, std::int64_t value) {
  const SimTime now = scheduler_.now();
  log_.record(Event{now, kRouterSource, kind, bytes, 0, value});
  log_.record(Event{now, kRouterSource, EventKind::BytesWAN, bytes, 0, 0});
}

void Router::issue() {
  Op op;
  if (retry_) {
    op = *retry_;
  } else if (!reads_.empty() && (queue_.empty() || last_op_ == Op::Write)) {
    op = Op::Read;
  } else if (!queue_.empty()) {
    op = Op::Write;
  } else {
    armed_ = false;
    return;
  }
  if (op == Op::Write)
    issue_write();
  else
    issue_read();
}

void Router::issue_write() {
  const SimTime now = scheduler_.now();
  if (config_.avoid_collisions && has_last_commit_) {
    const SimTime earliest = last_commit_ + store_.config().collision_window - store_.config().write_latency;
    if (now < earliest) {
      scheduler_.schedule(earliest, [this] { issue(); });
      return;
    }
  }

  log_.record(Event{now, kRouterSource, EventKind::QueueDepth, 0, 0, static_cast<std::int64_t>(queue_.size())});
  const std::size_t n = std::min(config_.batch_max, queue_.size());
  inflight_.clear();
  inflight_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    queued_.erase(queue_.front().key);
    inflight_.push_back(std::move(queue_.front()));
    queue_.pop_front();
  }

  const WriteReceipt receipt = store_.write(inflight_, now);
  if (receipt.status == CallStatus::RateLimited) {
    for (auto it = inflight_.rbegin(); it != inflight_.rend(); ++it) {
      queue_.push_front(std::move(*it));
      queued_[queue_.front().key] = queue_.begin();
    }
    inflight_.clear();
    wan(EventKind::StoreRateLimited, store_.config().rate_limited_overhead_bytes, 0);
    rate_limited(Op::Write);
    return;
  }

  wan(EventKind::StoreWriteOk, receipt.bytes, static_cast<std::int64_t>(n));
  ++stats_.calls_ok;
  attempts_ = 0;
  retry_.reset();
  last_op_ = Op::Write;
  has_last_commit_ = true;
  last_commit_ = receipt.commit_at;
  scheduler_.schedule(receipt.commit_at, [this] {
    store_.advance_to(scheduler_.now());
    stats_.rows_committed += inflight_.size();
    std::vector<CacheLine> done = std::move(inflight_);
    inflight_.clear();
    if (on_commit_)
      for (const auto& line : done) on_commit_(line);
    armed_ = false;
    kick();
  });
}

void Router::issue_read() {
  const SimTime now = scheduler_.now();
  std::vector<ReadWaiter> waiters(std::make_move_iterator(reads_.begin()), std::make_move_iterator(reads_.end()));
  reads_.clear();

  ReadReceipt receipt = store_.read_all(now);
  if (receipt.status == CallStatus::RateLimited) {
    for (auto it = waiters.rbegin(); it != waiters.rend(); ++it) reads_.push_front(std::move(*it));
    wan(EventKind::StoreRateLimited, store_.config().rate_limited_overhead_bytes, 0);
    rate_limited(Op::Read);
    return;
  }

  wan(EventKind::StoreReadAll, receipt.bytes, static_cast<std::int64_t>(receipt.rows.size()));
  ++stats_.calls_ok;
  attempts_ = 0;
  retry_.reset();
  last_op_ = Op::Read;
  const SimTime complete = receipt.complete_at;
  scheduler_.schedule(complete, [this, waiters = std::move(waiters), rows = std::move(receipt.rows)]() mutable {
    const SimTime t = scheduler_.now();
    for (auto& w : waiters) {
      if (w.probe) {
        log_.record(Event{t, kRouterSource, EventKind::PingRTT, 0, 0, (t - w.requested).ms()});
        w.probe(t - w.requested);
        continue;
      }
      ++stats_.reads_served;
      std::optional<CacheLine> found;
      for (const auto& r : rows) {
        if (r.key == w.key) {
          found = r;
          break;
        }
      }
      if (w.done) w.done(std::move(found));
    }
    armed_ = false;
    kick();
  });
}

void Router::rate_limited(Op op) {
  ++stats_.calls_rate_limited;
  ++attempts_;
  retry_ = op;
  SimTime delay = config_.backoff_base;
  for (unsigned i = 1; i < attempts_ && delay < config_.backoff_cap; ++i) delay = delay * 2;
  delay = std::min(delay, config_.backoff_cap);
  scheduler_.schedule_after(delay, [this] { issue(); });
}

}  // namespace fogcache
