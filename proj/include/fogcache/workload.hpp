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
 * @file workload.hpp
 * @brief Seedable evaluation workload: periodic writes with uniformly random
 *        payloads, periodic reads of recently observed keys.
 */

#ifndef FOGCACHE_WORKLOAD_HPP
#define FOGCACHE_WORKLOAD_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "fogcache/cache_core.hpp"
#include "fogcache/coherence.hpp"
#include "fogcache/netsim.hpp"

namespace fogcache {

enum class KeyChoice { RecencyWeighted, Uniform };
enum class PhaseMode { Staggered, Synchronized };

struct WorkloadConfig {
  SimTime write_period = seconds(1);
  SimTime read_period = seconds(15);
  std::size_t payload_size = 256;
  SimTime duration = seconds(600);
  KeyChoice key_choice = KeyChoice::RecencyWeighted;
  std::optional<std::size_t> recency_window;  // defaults to the cache capacity
  PhaseMode phase = PhaseMode::Staggered;
  double update_fraction = 0.0;  // share of write ticks that rewrite a known key
};

/// Keys a node has seen (own writes, announces, read results), in order of
/// first observation.
class KnownKeys {
 public:
  void observe(const CacheKey& key);
  bool contains(const CacheKey& key) const { return seen_.contains(key); }
  std::size_t size() const { return order_.size(); }
  bool empty() const { return order_.empty(); }
  const std::vector<CacheKey>& keys() const { return order_; }

  /// Uniform over the newest `window` keys (recency-weighted) or over the
  /// whole history. nullopt when empty.
  std::optional<CacheKey> sample(Rng& rng, KeyChoice choice, std::size_t window) const;

 private:
  std::vector<CacheKey> order_;
  std::unordered_set<CacheKey, CacheKeyHash> seen_;
};

/// Uniformly random payload bytes.
class PayloadGenerator {
 public:
  explicit PayloadGenerator(std::uint64_t seed) : rng_(seed) {}
  Bytes next(std::size_t n);

 private:
  Rng rng_;
};

struct WorkloadStats {
  std::uint64_t writes = 0;
  std::uint64_t updates = 0;
  std::uint64_t reads_scheduled = 0;
  std::uint64_t reads_issued = 0;
  std::uint64_t reads_skipped = 0;
};

/// Drives every node of a fog: writes at phase + k*write_period and reads
/// at phase + (k+1)*read_period, both for k = 0 .. floor(duration/period)-1.
class WorkloadDriver {
 public:
  WorkloadDriver(Fog& fog, WorkloadConfig config, std::uint64_t workload_seed, std::uint64_t payload_seed);
  WorkloadDriver(const WorkloadDriver&) = delete;
  WorkloadDriver& operator=(const WorkloadDriver&) = delete;

  /// Schedules the first write and read of every node.
  void start();

  SimTime phase(NodeId node) const;
  std::size_t recency_window() const;

  void next_write(NodeId node, std::uint64_t k);
  void next_read(NodeId node, std::uint64_t k);

  const KnownKeys& known(NodeId node) const { return known_.at(node); }
  const WorkloadStats& stats() const { return stats_; }
  /// Newest data timestamp written per key, for durability checks.
  const std::unordered_map<CacheKey, SimTime, CacheKeyHash>& latest_versions() const { return latest_; }
  std::uint64_t writes_per_node() const;
  std::uint64_t reads_per_node() const;
  /// Last workload event time plus one response window.
  SimTime horizon() const;

 private:
  Fog& fog_;
  WorkloadConfig config_;
  Rng rng_;
  PayloadGenerator payloads_;
  std::vector<KnownKeys> known_;
  WorkloadStats stats_;
  std::unordered_map<CacheKey, SimTime, CacheKeyHash> latest_;
};

}  // namespace fogcache

#endif  // FOGCACHE_WORKLOAD_HPP
