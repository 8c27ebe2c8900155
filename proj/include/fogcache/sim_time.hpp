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

#ifndef FOGCACHE_SIM_TIME_HPP
#define FOGCACHE_SIM_TIME_HPP

#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>

namespace fogcache {

/// Small integer identifying a fog node.
using NodeId = std::uint32_t;

/// Simulation-clock value with millisecond resolution. Used for both
/// instants and spans; the clock starts at zero.
class SimTime {
 public:
  constexpr SimTime() = default;

  static constexpr SimTime from_ms(std::int64_t ms) { return SimTime(ms); }
  static SimTime from_seconds(double s) { return SimTime(std::llround(s * 1000.0)); }
  static constexpr SimTime max() { return SimTime(std::numeric_limits<std::int64_t>::max()); }

  constexpr std::int64_t ms() const { return ms_; }
  constexpr double seconds() const { return static_cast<double>(ms_) / 1000.0; }

  constexpr auto operator<=>(const SimTime&) const = default;

  constexpr SimTime operator+(SimTime o) const { return SimTime(ms_ + o.ms_); }
  constexpr SimTime operator-(SimTime o) const { return SimTime(ms_ - o.ms_); }
  constexpr SimTime& operator+=(SimTime o) {
    ms_ += o.ms_;
    return *this;
  }
  constexpr SimTime operator*(std::int64_t k) const { return SimTime(ms_ * k); }

 private:
  constexpr explicit SimTime(std::int64_t ms) : ms_(ms) {}
  std::int64_t ms_ = 0;
};

constexpr SimTime milliseconds(std::int64_t ms) { return SimTime::from_ms(ms); }
constexpr SimTime seconds(std::int64_t s) { return SimTime::from_ms(s * 1000); }

}  // namespace fogcache

#endif  // FOGCACHE_SIM_TIME_HPP
