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

#include <algorithm>
#include <cmath>
#include <random>
#include <tuple>
#include <vector>

#include "doctest.h"

#include "fogcache/netsim.hpp"
#include "oracles.hpp"

using namespace fogcache;

TEST_CASE("scheduler orders by time then insertion") {
  Scheduler s;
  std::vector<int> order;
  s.schedule(seconds(5), [&] { order.push_back(5); });
  s.schedule(seconds(3), [&] { order.push_back(3); });
  s.schedule(seconds(5), [&] { order.push_back(6); });
  s.run();
  CHECK(order == std::vector<int>{3, 5, 6});
  CHECK(s.now() == seconds(5));
  CHECK_THROWS_AS(s.schedule(seconds(1), [] {}), std::logic_error);
}

TEST_CASE("scheduler matches a sort oracle on 1e5 random events") {
  std::mt19937_64 gen(7);
  Scheduler s;
  std::vector<std::pair<std::int64_t, int>> expected;
  std::vector<std::pair<std::int64_t, int>> got;
  for (int i = 0; i < 100000; ++i) {
    const std::int64_t t = static_cast<std::int64_t>(gen() % 5000);
    expected.emplace_back(t, i);
    s.schedule(milliseconds(t), [&got, &s, i] { got.emplace_back(s.now().ms(), i); });
  }
  std::stable_sort(expected.begin(), expected.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  s.run();
  CHECK(got == expected);
  CHECK(s.executed() == 100000u);
}

TEST_CASE("run_until stops at the boundary and advances the clock") {
  Scheduler s;
  int fired = 0;
  s.schedule(seconds(1), [&] { ++fired; });
  s.schedule(seconds(2), [&] { ++fired; });
  s.schedule(seconds(3), [&] { ++fired; });
  s.run_until(seconds(2));
  CHECK(fired == 2);
  CHECK(s.now() == seconds(2));
  CHECK(s.pending() == 1);
}

TEST_CASE("events scheduled from inside handlers keep time monotone") {
  Scheduler s;
  SimTime last;
  bool monotone = true;
  std::function<void(int)> chain = [&](int left) {
    monotone = monotone && s.now() >= last;
    last = s.now();
    if (left > 0) s.schedule_after(milliseconds(left % 3), [&, left] { chain(left - 1); });
  };
  s.schedule(SimTime{}, [&] { chain(100); });
  s.run();
  CHECK(monotone);
}

TEST_CASE("rng helpers are deterministic and in range") {
  Rng a(derive_seed(1, 2)), b(derive_seed(1, 2));
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform01();
    CHECK(u == b.uniform01());
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(a.below(7) == b.below(7));
  }
  CHECK(derive_seed(1, 1) != derive_seed(1, 2));
  CHECK(derive_seed(1, 1) != derive_seed(2, 1));
  Rng c(3);
  CHECK_FALSE(c.bernoulli(0.0));
  CHECK(c.bernoulli(1.0));
}

TEST_CASE("broadcast delivers to every peer except the sender") {
  Scheduler s;
  BroadcastMedium m(s, 5, 0.0, DelayModel::constant(milliseconds(5)), 1);
  std::vector<NodeId> got;
  auto out = m.broadcast(2, 100, [&](NodeId k) { got.push_back(k); });
  CHECK(out.delivered.size() == 4);
  CHECK(out.bytes_charged == 400);
  CHECK(got.empty());
  s.run();
  std::sort(got.begin(), got.end());
  CHECK(got == std::vector<NodeId>{0, 1, 3, 4});
  CHECK(s.now() == milliseconds(5));
  CHECK(m.lan_bytes() == 400);
}

TEST_CASE("total loss delivers nothing but still charges the send") {
  Scheduler s;
  BroadcastMedium m(s, 5, 1.0, DelayModel::constant(milliseconds(5)), 1);
  int got = 0;
  auto out = m.broadcast(0, 10, [&](NodeId) { ++got; });
  s.run();
  CHECK(got == 0);
  CHECK(out.lost.size() == 4);
  CHECK(m.lan_bytes() == 40);
}

TEST_CASE("per-receiver delivery rate is binomial") {
  Scheduler s;
  const double p = 0.3;
  const std::size_t n = 50;
  const int rounds = 10000;
  BroadcastMedium m(s, n, p, DelayModel::constant(milliseconds(1)), 99);
  std::vector<int> received(n, 0);
  for (int r = 0; r < rounds; ++r) {
    auto out = m.broadcast(static_cast<NodeId>(r % n), 1, [](NodeId) {});
    for (const auto& d : out.delivered) ++received[d.receiver];
  }
  for (std::size_t k = 0; k < n; ++k) {
    const double trials = rounds - rounds / static_cast<double>(n);  // k is sender 1/n of the time
    const double rate = received[k] / trials;
    // 4 sigma: 50 receivers are checked at once.
    CHECK(std::abs(rate - 0.7) <= 4.0 * std::sqrt(0.7 * 0.3 / trials));
  }
  CHECK(m.lan_bytes() == static_cast<std::uint64_t>(rounds) * (n - 1));
}

TEST_CASE("uniform delays stay inside the configured range") {
  Scheduler s;
  BroadcastMedium m(s, 10, 0.0, DelayModel::uniform(milliseconds(2), milliseconds(9)), 5);
  bool inside = true;
  SimTime lo = seconds(1), hi;
  m.set_tap([&](NodeId, NodeId, SimTime sent, SimTime arrival) {
    const SimTime d = arrival - sent;
    inside = inside && d >= milliseconds(2) && d <= milliseconds(9);
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  });
  for (int i = 0; i < 200; ++i) m.broadcast(0, 1, [](NodeId) {});
  CHECK(inside);
  CHECK(lo == milliseconds(2));
  CHECK(hi == milliseconds(9));
}

TEST_CASE("markov bound and exact complete loss") {
  CHECK(markov_loss_bound(0.1, 11) == doctest::Approx(0.01));
  CHECK(markov_loss_bound(0.5, 2) == doctest::Approx(0.5));
  CHECK(markov_loss_bound(0.0, 50) == 0.0);
  CHECK_THROWS_AS(markov_loss_bound(0.1, 1), std::invalid_argument);
  CHECK_THROWS_AS(markov_loss_bound(1.5, 3), std::invalid_argument);
  CHECK(exact_complete_loss(0.5, 1) == doctest::Approx(0.5));
  CHECK(exact_complete_loss(0.1, 3) == doctest::Approx(0.001));
  CHECK_THROWS_AS(exact_complete_loss(-0.1, 3), std::invalid_argument);
}

TEST_CASE("empirical complete loss tracks p^receivers") {
  for (auto [p, n] : {std::tuple{0.3, std::size_t{50}}, std::tuple{0.5, std::size_t{5}}, std::tuple{0.3, std::size_t{3}}}) {
    CAPTURE(p);
    CAPTURE(n);
    Scheduler s;
    BroadcastMedium m(s, n, p, DelayModel::constant(milliseconds(1)), 11);
    const int rounds = 100000;
    int complete = 0;
    for (int r = 0; r < rounds; ++r)
      if (m.broadcast(0, 1, [](NodeId) {}).delivered.empty()) ++complete;
    const double rate = static_cast<double>(complete) / rounds;
    const double exact = exact_complete_loss(p, n - 1);
    CHECK(std::abs(rate - exact) <= oracle::three_sigma(exact, rounds));
    CHECK(rate <= markov_loss_bound(p, n) + oracle::three_sigma(markov_loss_bound(p, n), rounds));
  }
}
