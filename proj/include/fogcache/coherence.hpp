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
 * @file coherence.hpp
 * @brief Fog protocol messages and per-node handlers for soft cache
 *        coherence over a lossy broadcast medium.
 *
 * Write path: the origin inserts a new line locally (dirty), broadcasts a
 * WriteAnnounce and hands the line to the router for persistence. Receivers
 * insert a clean copy; there is no retransmission.
 *
 * Read path: a local hit completes at once. Otherwise the reader broadcasts
 * a ReadRequest and collects ReadResponses until the response window closes.
 * Holders answer, non-holders stay silent. The freshest response wins and is
 * cached locally; zero responses is a miss and goes to the router.
 *
 * Wire format (big-endian): tag 1 B | sender 4 B | body, where request ids
 * are 8 B and lines use the cache_core encoding.
 */

#ifndef FOGCACHE_COHERENCE_HPP
#define FOGCACHE_COHERENCE_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "fogcache/backing_store.hpp"
#include "fogcache/cache_core.hpp"
#include "fogcache/metrics.hpp"
#include "fogcache/netsim.hpp"

namespace fogcache {

enum class MessageType : std::uint8_t {
  WriteAnnounce = 1,
  ReadRequest = 2,
  ReadResponse = 3,
  Ping = 4,
  PingReply = 5,
};

struct WriteAnnounce {
  CacheLine line;
  bool operator==(const WriteAnnounce&) const = default;
};
struct ReadRequest {
  std::uint64_t request_id = 0;
  CacheKey key;
  bool operator==(const ReadRequest&) const = default;
};
struct ReadResponse {
  std::uint64_t request_id = 0;
  CacheLine line;
  bool operator==(const ReadResponse&) const = default;
};
struct Ping {
  std::uint64_t request_id = 0;
  bool operator==(const Ping&) const = default;
};
struct PingReply {
  std::uint64_t request_id = 0;
  bool operator==(const PingReply&) const = default;
};

struct FogMessage {
  NodeId sender = 0;
  std::variant<WriteAnnounce, ReadRequest, ReadResponse, Ping, PingReply> body;

  MessageType type() const { return static_cast<MessageType>(body.index() + 1); }
  bool operator==(const FogMessage&) const = default;
};

std::size_t wire_size(const FogMessage& msg);
Bytes encode_message(const FogMessage& msg);
/// Throws std::runtime_error on truncated input or an unknown tag.
FogMessage decode_message(std::span<const std::uint8_t> in);

/// Request ids carry their requester in the top 24 bits so every node can
/// tell whether a response is addressed to it.
constexpr std::uint64_t make_request_id(NodeId requester, std::uint64_t counter) {
  return (static_cast<std::uint64_t>(requester) << 40) | (counter & ((std::uint64_t{1} << 40) - 1));
}
constexpr NodeId request_owner(std::uint64_t request_id) { return static_cast<NodeId>(request_id >> 40); }

enum class FogMode {
  Cached,
  Baseline,  // no fog cache: every write and read goes through the router
};

struct CoherenceConfig {
  std::size_t cache_capacity = 200;
  SimTime response_window = milliseconds(500);
  SimTime ping_timeout = seconds(5);
  FogMode mode = FogMode::Cached;
};

enum class ReadOutcome { LocalHit, FogHit, Miss };

struct ReadRecord {
  NodeId reader = 0;
  CacheKey key;
  std::uint64_t request_id = 0;  // 0 for local hits
  ReadOutcome outcome = ReadOutcome::Miss;
  SimTime issued;
  SimTime completed;
  std::vector<CacheLine> responses;
  std::optional<CacheLine> line;  // winner for hits
};

struct PendingRead {
  std::uint64_t request_id = 0;
  CacheKey key;
  SimTime issued_at;
  SimTime deadline;
  std::vector<CacheLine> responses;
};

struct NodeStats {
  std::uint64_t generated = 0;
  std::uint64_t requests_answered = 0;
  std::uint64_t orphan_responses = 0;
  std::uint64_t dirty_evictions = 0;
};

class Fog;

class FogNode {
 public:
  using PingCallback = std::function<void(std::optional<SimTime>)>;

  FogNode(Fog& fog, NodeId id, std::size_t capacity);
  FogNode(const FogNode&) = delete;
  FogNode& operator=(const FogNode&) = delete;

  NodeId id() const { return id_; }
  CacheStore& cache() { return cache_; }
  const CacheStore& cache() const { return cache_; }
  const NodeStats& stats() const { return stats_; }
  const std::map<std::uint64_t, PendingRead>& pending_reads() const { return pending_; }

  /// New datum stamped with the current time and a fresh key.
  CacheLine generate(Bytes payload);
  /// New version of an existing key, stamped with the current time.
  CacheLine update(const CacheKey& key, Bytes payload);

  /// Local hit returns the line. Otherwise a read request goes out and the
  /// outcome is reported through the fog's read hook at the deadline.
  std::optional<CacheLine> begin_read(const CacheKey& key);
  void finish_read(std::uint64_t request_id);

  /// Broadcasts a Ping and reports the time until all peers replied, or
  /// nullopt if the timeout fires first. Needs at least two nodes.
  std::uint64_t ping_round(PingCallback done = {});

  void on_message(const FogMessage& msg);
  void on_write_announce(const WriteAnnounce& msg);
  void on_read_request(const ReadRequest& msg);
  void on_read_response(const ReadResponse& msg);
  void on_ping(const Ping& msg);
  void on_ping_reply(const PingReply& msg);
  /// Router confirmation that this node's line reached the store.
  void on_persisted(const CacheLine& line);

 private:
  struct PingRound {
    SimTime issued;
    std::size_t expected = 0;
    std::size_t received = 0;
    PingCallback done;
  };

  CacheLine publish(CacheLine line);
  void store_locally(CacheLine line);
  std::uint64_t next_request_id() { return make_request_id(id_, ++request_counter_); }

  Fog& fog_;
  NodeId id_;
  CacheStore cache_;
  std::uint64_t seq_ = 0;
  std::uint64_t request_counter_ = 0;
  std::map<std::uint64_t, PendingRead> pending_;
  std::map<std::uint64_t, PingRound> pings_;
  NodeStats stats_;
};

class Fog {
 public:
  using ObserveHook = std::function<void(NodeId, const CacheKey&)>;
  using ReadHook = std::function<void(const ReadRecord&)>;
  /// Called when a node answers a read request. `arrival` is when the copy
  /// reaches the requester, or nullopt if the medium dropped it.
  using ResponseHook =
      std::function<void(NodeId responder, std::uint64_t request_id, const CacheLine& line, std::optional<SimTime> arrival)>;

  Fog(Scheduler& scheduler, BroadcastMedium& medium, EventLog& log, Router* router, CoherenceConfig config);
  Fog(const Fog&) = delete;
  Fog& operator=(const Fog&) = delete;

  std::size_t size() const { return nodes_.size(); }
  FogNode& node(NodeId id) { return *nodes_.at(id); }
  const FogNode& node(NodeId id) const { return *nodes_.at(id); }

  Scheduler& scheduler() { return scheduler_; }
  EventLog& log() { return log_; }
  Router* router() { return router_; }
  const CoherenceConfig& config() const { return config_; }

  BroadcastOutcome broadcast(NodeId sender, FogMessage msg);

  void set_observer(ObserveHook hook) { observe_ = std::move(hook); }
  void set_read_hook(ReadHook hook) { read_hook_ = std::move(hook); }
  void set_response_hook(ResponseHook hook) { response_hook_ = std::move(hook); }

  void observe(NodeId node, const CacheKey& key) {
    if (observe_) observe_(node, key);
  }
  void report_read(const ReadRecord& r) {
    if (read_hook_) read_hook_(r);
  }
  void report_response(NodeId responder, std::uint64_t request_id, const CacheLine& line,
                       std::optional<SimTime> arrival) {
    if (response_hook_) response_hook_(responder, request_id, line, arrival);
  }

  /// Freshest valid copy of `key` across every node's cache, ignoring the
  /// network. Used to check soft-coherence reachability.
  std::optional<CacheLine> fog_wide_read(const CacheKey& key) const;

  std::uint64_t orphan_responses() const;

 private:
  Scheduler& scheduler_;
  BroadcastMedium& medium_;
  EventLog& log_;
  Router* router_;
  CoherenceConfig config_;
  std::vector<std::unique_ptr<FogNode>> nodes_;
  ObserveHook observe_;
  ReadHook read_hook_;
  ResponseHook response_hook_;
};

}  // namespace fogcache

#endif  // FOGCACHE_COHERENCE_HPP
