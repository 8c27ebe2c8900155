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
 * @file netsim.hpp
 * @brief Deterministic discrete-event scheduler and a lossy broadcast medium.
 *
 * Events run in (time, insertion sequence) order. Every random draw comes
 * from an explicitly seeded stream so a (config, seed) pair always replays
 * the same event sequence.
 */

#ifndef FOGCACHE_NETSIM_HPP
#define FOGCACHE_NETSIM_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <queue>
#include <random>
#include <vector>

#include "fogcache/sim_time.hpp"

namespace fogcache {

/// splitmix64 mix of (base, stream) used to derive independent seeds.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// Seeded stream with platform-independent derived draws. The standard
/// distributions are implementation-defined, so they are not used here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1) with 53 bits of precision.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);
  /// Bernoulli(p); p <= 0 never fires and p >= 1 always fires.
  bool bernoulli(double p) { return p >= 1.0 || (p > 0.0 && uniform01() < p); }

 private:
  std::mt19937_64 engine_;
};

class Scheduler {
 public:
  using Action = std::function<void()>;

  SimTime now() const { return now_; }

  /// Queues `action` at absolute time `at`. Scheduling in the past throws
  /// std::logic_error.
  void schedule(SimTime at, Action action);
  void schedule_after(SimTime delay, Action action) { schedule(now_ + delay, std::move(action)); }

  /// Runs the next event; false when the queue is empty.
  bool step();
  /// Runs every event with time <= end, then sets the clock to `end`.
  void run_until(SimTime end);
  void run();

  std::size_t pending() const { return queue_.size(); }
  std::uint64_t executed() const { return executed_; }

 private:
  struct Entry {
    SimTime at;
    std::uint64_t seq;
    Action action;
  };
  struct Later {
    bool operator()(const Entry& a, const Entry& b) const {
      if (a.at != b.at) return a.at > b.at;
      return a.seq > b.seq;
    }
  };

  SimTime now_;
  std::uint64_t next_seq_ = 0;
  std::uint64_t executed_ = 0;
  std::priority_queue<Entry, std::vector<Entry>, Later> queue_;
};

/// One-way latency distribution: constant, or uniform over [lo, hi] ms.
struct DelayModel {
  enum class Kind { Constant, Uniform };

  Kind kind = Kind::Constant;
  SimTime lo = milliseconds(5);
  SimTime hi = milliseconds(5);

  static DelayModel constant(SimTime d) { return {Kind::Constant, d, d}; }
  static DelayModel uniform(SimTime lo, SimTime hi) { return {Kind::Uniform, lo, hi}; }

  SimTime sample(Rng& rng) const;
  SimTime max() const { return kind == Kind::Constant ? lo : hi; }
};

struct Delivery {
  NodeId receiver;
  SimTime arrival;
};

struct BroadcastOutcome {
  std::vector<Delivery> delivered;
  std::vector<NodeId> lost;
  std::uint64_t bytes_charged = 0;
};

/// Broadcast domain over nodes 0..n-1. Each (message, receiver) pair is lost
/// independently with probability p; survivors arrive after a sampled delay.
class BroadcastMedium {
 public:
  using Receiver = std::function<void(NodeId)>;
  using Tap = std::function<void(NodeId sender, NodeId receiver, SimTime sent, SimTime arrival)>;

  BroadcastMedium(Scheduler& scheduler, std::size_t n_nodes, double loss_probability, DelayModel delay,
                  std::uint64_t seed);

  /// Sends `wire_bytes` from `sender` to every other node. `on_deliver` runs
  /// once per surviving copy, at its arrival time. The send is charged for
  /// all n-1 attempted deliveries regardless of loss.
  BroadcastOutcome broadcast(NodeId sender, std::size_t wire_bytes, Receiver on_deliver);

  void set_loss_probability(double p);
  double loss_probability() const { return loss_probability_; }
  std::size_t size() const { return n_nodes_; }
  const DelayModel& delay_model() const { return delay_; }

  /// Observer of every scheduled delivery.
  void set_tap(Tap tap) { tap_ = std::move(tap); }

  std::uint64_t lan_bytes() const { return lan_bytes_; }
  std::uint64_t broadcasts() const { return broadcasts_; }

 private:
  Scheduler& scheduler_;
  std::size_t n_nodes_;
  double loss_probability_;
  DelayModel delay_;
  Rng rng_;
  Tap tap_;
  std::uint64_t lan_bytes_ = 0;
  std::uint64_t broadcasts_ = 0;
};

/// Markov-inequality bound on complete broadcast loss in a fog of n nodes:
/// Pr[sum L_k >= n-1] <= E[L_k] / (n-1) = p / (n-1).
/// Throws std::invalid_argument for n < 2 or p outside [0, 1].
double markov_loss_bound(double p, std::size_t n_nodes);

/// Probability that a broadcast is lost at all `receivers` independent
/// receivers: p^receivers.
double exact_complete_loss(double p, std::size_t receivers);

}  // namespace fogcache

#endif  // FOGCACHE_NETSIM_HPP
