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
 * @file cache_core.hpp
 * @brief Per-node cache storage: line format, key derivation, LRU store and
 *        the freshest-timestamp resolution rule.
 *
 * Line layout (one row of a node cache):
 *
 *   | key (128 bit) | valid | time inserted | data timestamp | origin | payload |
 *
 * The canonical binary encoding of a line is fixed-order and big-endian:
 *
 *   key 16 B | valid 1 B | time_inserted 8 B | data_timestamp 8 B |
 *   origin_node 4 B | payload length 4 B | payload
 *
 * Times are encoded as signed milliseconds of simulation clock. The dirty
 * flag is local bookkeeping and is never encoded.
 */

#ifndef FOGCACHE_CACHE_CORE_HPP
#define FOGCACHE_CACHE_CORE_HPP

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <list>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fogcache/sim_time.hpp"

namespace fogcache {

using Bytes = std::vector<std::uint8_t>;

/// 128-bit cache key.
struct CacheKey {
  std::array<std::uint8_t, 16> bytes{};

  auto operator<=>(const CacheKey&) const = default;

  /// Lower 64 bits (little-endian view of the first eight bytes).
  std::uint64_t low64() const;
  std::string hex() const;
  static CacheKey from_hex(std::string_view hex);
};

struct CacheKeyHash {
  std::size_t operator()(const CacheKey& k) const noexcept { return static_cast<std::size_t>(k.low64()); }
};

/// MurmurHash3 x64_128 (Appleby). Output is h1 then h2, each little-endian.
std::array<std::uint8_t, 16> murmur3_x64_128(std::span<const std::uint8_t> data, std::uint32_t seed = 0);

/// Key for the seq-th datum generated by `node` at `data_timestamp`.
///
/// The digest input is the 20-byte big-endian string
/// node (u32) | data_timestamp in ms (i64) | seq (u64), hashed with
/// MurmurHash3 x64_128, seed 0.
CacheKey make_key(NodeId node, SimTime data_timestamp, std::uint64_t seq);

struct CacheLine {
  CacheKey key;
  bool valid = true;
  SimTime time_inserted;
  SimTime data_timestamp;
  NodeId origin_node = 0;
  Bytes payload;
  bool dirty = false;  // not yet confirmed persisted; never encoded

  bool operator==(const CacheLine&) const = default;
};

/// True when `a` is the version that wins over `b`: newer data timestamp,
/// ties to the smaller origin node.
bool supersedes(const CacheLine& a, const CacheLine& b);

/// Fixed-capacity LRU-ordered map of cache lines.
class CacheStore {
 public:
  explicit CacheStore(std::size_t capacity);

  /// Inserts or updates `line` and makes it most recent. Returns the evicted
  /// least-recently-used line when a new key had to make room.
  /// A resident key keeps its current contents unless `line` supersedes it.
  std::optional<CacheLine> insert(CacheLine line);

  /// Valid resident line for `key`, promoted to most recent. Absent or
  /// invalid keys leave recency untouched.
  std::optional<CacheLine> lookup(const CacheKey& key);

  /// Non-promoting access; returns nullptr for absent or invalid lines.
  const CacheLine* peek(const CacheKey& key) const;

  /// Clears the dirty flag if the resident version has `data_timestamp`.
  bool mark_clean(const CacheKey& key, SimTime data_timestamp);

  /// Sets valid=false on a resident line. No protocol path calls this; it
  /// exists so the flag has a writer.
  bool invalidate(const CacheKey& key);

  bool contains(const CacheKey& key) const { return index_.contains(key); }
  std::size_t size() const { return index_.size(); }
  std::size_t capacity() const { return capacity_; }

  /// Resident keys, most recent first.
  std::vector<CacheKey> keys_by_recency() const;
  const std::list<CacheLine>& lines_by_recency() const { return order_; }

 private:
  std::size_t capacity_;
  std::list<CacheLine> order_;  // front = most recently used
  std::unordered_map<CacheKey, std::list<CacheLine>::iterator, CacheKeyHash> index_;
};

/// Picks the freshest line among responses for one key. Throws
/// std::logic_error on an empty list.
const CacheLine& resolve(std::span<const CacheLine> responses);

constexpr std::size_t kLineHeaderBytes = 16 + 1 + 8 + 8 + 4 + 4;

inline std::size_t encoded_line_size(const CacheLine& line) { return kLineHeaderBytes + line.payload.size(); }
void append_line(Bytes& out, const CacheLine& line);
Bytes encode_line(const CacheLine& line);
/// Decodes one line starting at `offset` and advances it. Throws
/// std::runtime_error on truncated input.
CacheLine decode_line(std::span<const std::uint8_t> in, std::size_t& offset);

namespace wire {
void put_u8(Bytes& out, std::uint8_t v);
void put_u32(Bytes& out, std::uint32_t v);
void put_u64(Bytes& out, std::uint64_t v);
std::uint8_t get_u8(std::span<const std::uint8_t> in, std::size_t& offset);
std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t& offset);
std::uint64_t get_u64(std::span<const std::uint8_t> in, std::size_t& offset);
}  // namespace wire

std::string to_hex(std::span<const std::uint8_t> bytes);
Bytes from_hex(std::string_view hex);

}  // namespace fogcache

#endif  // FOGCACHE_CACHE_CORE_HPP
