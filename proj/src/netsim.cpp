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

#include "fogcache/netsim.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace fogcache {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("Rng::below: empty range");
  // Rejection sampling on the top of the range keeps the draw unbiased.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t v;
  do {
    v = engine_();
  } while (v >= limit);
  return v % n;
}

void Scheduler::schedule(SimTime at, Action action) {
  if (at < now_)
    throw std::logic_error("event scheduled in the past: " + std::to_string(at.ms()) + " ms < now " +
                           std::to_string(now_.ms()) + " ms");
  queue_.push(Entry{at, next_seq_++, std::move(action)});
}

bool Scheduler::step() {
  if (queue_.empty()) return false;
  // priority_queue::top is const; the action is moved out via const_cast
  // before pop, which is safe because the entry is discarded right after.
  auto& top = const_cast<Entry&>(queue_.top());
  Action action = std::move(top.action);
  now_ = top.at;
  queue_.pop();
  ++executed_;
  action();
  return true;
}

void Scheduler::run_until(SimTime end) {
  while (!queue_.empty() && queue_.top().at <= end) step();
  if (now_ < end) now_ = end;
}

void Scheduler::run() {
  while (step()) {
  }
}

SimTime DelayModel::sample(Rng& rng) const {
  if (kind == Kind::Constant) return lo;
  const auto span = static_cast<std::uint64_t>(hi.ms() - lo.ms()) + 1;
  return lo + milliseconds(static_cast<std::int64_t>(rng.below(span)));
}

BroadcastMedium::BroadcastMedium(Scheduler& scheduler, std::size_t n_nodes, double loss_probability,
                                 DelayModel delay, std::uint64_t seed)
    : scheduler_(scheduler), n_nodes_(n_nodes), loss_probability_(0.0), delay_(delay), rng_(seed) {
  if (n_nodes == 0) throw std::invalid_argument("broadcast medium needs at least one node");
  if (delay.lo.ms() < 0 || delay.hi < delay.lo) throw std::invalid_argument("invalid delay model");
  set_loss_probability(loss_probability);
}

void BroadcastMedium::set_loss_probability(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("loss probability must lie in [0, 1]");
  loss_probability_ = p;
}

BroadcastOutcome BroadcastMedium::broadcast(NodeId sender, std::size_t wire_bytes, Receiver on_deliver) {
  if (sender >= n_nodes_) throw std::out_of_range("unregistered sender " + std::to_string(sender));
  BroadcastOutcome out;
  out.bytes_charged = static_cast<std::uint64_t>(wire_bytes) * (n_nodes_ - 1);
  lan_bytes_ += out.bytes_charged;
  ++broadcasts_;

  auto shared = std::make_shared<Receiver>(std::move(on_deliver));
  const SimTime sent = scheduler_.now();
  for (NodeId k = 0; k < n_nodes_; ++k) {
    if (k == sender) continue;
    if (rng_.bernoulli(loss_probability_)) {
      out.lost.push_back(k);
      continue;
    }
    const SimTime arrival = sent + delay_.sample(rng_);
    out.delivered.push_back({k, arrival});
    if (tap_) tap_(sender, k, sent, arrival);
    scheduler_.schedule(arrival, [shared, k] { (*shared)(k); });
  }
  return out;
}

double markov_loss_bound(double p, std::size_t n_nodes) {
  if (n_nodes < 2) throw std::invalid_argument("markov_loss_bound needs at least two nodes");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("probability must lie in [0, 1]");
  return p / static_cast<double>(n_nodes - 1);
}

double exact_complete_loss(double p, std::size_t receivers) {
  if (receivers == 0) throw std::invalid_argument("exact_complete_loss needs at least one receiver");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("probability must lie in [0, 1]");
  return std::pow(p, static_cast<double>(receivers));
}

}  // namespace fogcache
