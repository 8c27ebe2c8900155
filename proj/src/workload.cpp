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

#include "fogcache/workload.hpp"

#include <stdexcept>

namespace fogcache {

void KnownKeys::observe(const CacheKey& key) {
  if (seen_.insert(key).second) order_.push_back(key);
}

std::optional<CacheKey> KnownKeys::sample(Rng& rng, KeyChoice choice, std::size_t window) const {
  if (order_.empty()) return std::nullopt;
  std::size_t span = order_.size();
  if (choice == KeyChoice::RecencyWeighted && window > 0 && window < span) span = window;
  const std::size_t offset = order_.size() - span;
  return order_[offset + static_cast<std::size_t>(rng.below(span))];
}

Bytes PayloadGenerator::next(std::size_t n) {
  Bytes out(n);
  std::size_t i = 0;
  while (i < n) {
    std::uint64_t word = rng_.next();
    for (int b = 0; b < 8 && i < n; ++b, ++i) {
      out[i] = static_cast<std::uint8_t>(word & 0xff);
      word >>= 8;
    }
  }
  return out;
}

WorkloadDriver::WorkloadDriver(Fog& fog, WorkloadConfig config, std::uint64_t workload_seed, std::uint64_t payload_seed)
    : fog_(fog), config_(config), rng_(workload_seed), payloads_(payload_seed), known_(fog.size()) {
  if (config_.write_period <= SimTime{} || config_.read_period <= SimTime{})
    throw std::invalid_argument("workload periods must be positive");
  if (config_.duration <= SimTime{}) throw std::invalid_argument("workload duration must be positive");
  if (!(config_.update_fraction >= 0.0 && config_.update_fraction <= 1.0))
    throw std::invalid_argument("update_fraction must lie in [0, 1]");
  fog_.set_observer([this](NodeId node, const CacheKey& key) { known_.at(node).observe(key); });
}

SimTime WorkloadDriver::phase(NodeId node) const {
  if (config_.phase == PhaseMode::Synchronized) return SimTime{};
  return milliseconds(config_.write_period.ms() * static_cast<std::int64_t>(node) /
                      static_cast<std::int64_t>(fog_.size()));
}

std::size_t WorkloadDriver::recency_window() const {
  return config_.recency_window.value_or(fog_.config().cache_capacity);
}

std::uint64_t WorkloadDriver::writes_per_node() const {
  return static_cast<std::uint64_t>(config_.duration.ms() / config_.write_period.ms());
}

std::uint64_t WorkloadDriver::reads_per_node() const {
  return static_cast<std::uint64_t>(config_.duration.ms() / config_.read_period.ms());
}

SimTime WorkloadDriver::horizon() const {
  SimTime last_phase;
  for (NodeId n = 0; n < fog_.size(); ++n) last_phase = std::max(last_phase, phase(n));
  SimTime last_write = config_.write_period * static_cast<std::int64_t>(writes_per_node());
  SimTime last_read = config_.read_period * static_cast<std::int64_t>(reads_per_node());
  return last_phase + std::max(last_write, last_read) + fog_.config().response_window;
}

void WorkloadDriver::start() {
  for (NodeId n = 0; n < fog_.size(); ++n) {
    if (writes_per_node() > 0) fog_.scheduler().schedule(phase(n), [this, n] { next_write(n, 0); });
    if (reads_per_node() > 0)
      fog_.scheduler().schedule(phase(n) + config_.read_period, [this, n] { next_read(n, 0); });
  }
}

void WorkloadDriver::next_write(NodeId node, std::uint64_t k) {
  const KnownKeys& known = known_.at(node);
  const bool update = config_.update_fraction > 0.0 && !known.empty() && rng_.bernoulli(config_.update_fraction);
  if (update) {
    const CacheKey key = *known.sample(rng_, config_.key_choice, recency_window());
    const CacheLine line = fog_.node(node).update(key, payloads_.next(config_.payload_size));
    latest_[line.key] = line.data_timestamp;
    ++stats_.updates;
  } else {
    const CacheLine line = fog_.node(node).generate(payloads_.next(config_.payload_size));
    latest_[line.key] = line.data_timestamp;
  }
  ++stats_.writes;
  if (k + 1 < writes_per_node())
    fog_.scheduler().schedule(phase(node) + config_.write_period * static_cast<std::int64_t>(k + 1),
                              [this, node, k] { next_write(node, k + 1); });
}

void WorkloadDriver::next_read(NodeId node, std::uint64_t k) {
  ++stats_.reads_scheduled;
  auto key = known_.at(node).sample(rng_, config_.key_choice, recency_window());
  if (!key) {
    ++stats_.reads_skipped;
    fog_.log().record(Event{fog_.scheduler().now(), node, EventKind::ReadSkipped, 0, 0, 0});
  } else {
    ++stats_.reads_issued;
    fog_.node(node).begin_read(*key);
  }
  if (k + 1 < reads_per_node())
    fog_.scheduler().schedule(phase(node) + config_.read_period * static_cast<std::int64_t>(k + 2),
                              [this, node, k] { next_read(node, k + 1); });
}

}  // namespace fogcache
