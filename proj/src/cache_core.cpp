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

#include "fogcache/cache_core.hpp"

#include <algorithm>
#include <cstring>
#include <stdexcept>

namespace fogcache {

namespace {

inline std::uint64_t rotl64(std::uint64_t x, int r) { return (x << r) | (x >> (64 - r)); }

inline std::uint64_t fmix64(std::uint64_t k) {
  k ^= k >> 33;
  k *= 0xff51afd7ed558ccdULL;
  k ^= k >> 33;
  k *= 0xc4ceb9fe1a85ec53ULL;
  k ^= k >> 33;
  return k;
}

inline std::uint64_t load_le64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

inline void store_le64(std::uint8_t* p, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

std::array<std::uint8_t, 16> murmur3_x64_128(std::span<const std::uint8_t> data, std::uint32_t seed) {
  const std::size_t len = data.size();
  const std::size_t nblocks = len / 16;
  std::uint64_t h1 = seed;
  std::uint64_t h2 = seed;
  constexpr std::uint64_t c1 = 0x87c37b91114253d5ULL;
  constexpr std::uint64_t c2 = 0x4cf5ad432745937fULL;

  for (std::size_t i = 0; i < nblocks; ++i) {
    std::uint64_t k1 = load_le64(data.data() + i * 16);
    std::uint64_t k2 = load_le64(data.data() + i * 16 + 8);

    k1 *= c1;
    k1 = rotl64(k1, 31);
    k1 *= c2;
    h1 ^= k1;
    h1 = rotl64(h1, 27);
    h1 += h2;
    h1 = h1 * 5 + 0x52dce729;

    k2 *= c2;
    k2 = rotl64(k2, 33);
    k2 *= c1;
    h2 ^= k2;
    h2 = rotl64(h2, 31);
    h2 += h1;
    h2 = h2 * 5 + 0x38495ab5;
  }

  const std::uint8_t* tail = data.data() + nblocks * 16;
  std::uint64_t k1 = 0;
  std::uint64_t k2 = 0;
  switch (len & 15) {
    case 15: k2 ^= std::uint64_t(tail[14]) << 48; [[fallthrough]];
    case 14: k2 ^= std::uint64_t(tail[13]) << 40; [[fallthrough]];
    case 13: k2 ^= std::uint64_t(tail[12]) << 32; [[fallthrough]];
    case 12: k2 ^= std::uint64_t(tail[11]) << 24; [[fallthrough]];
    case 11: k2 ^= std::uint64_t(tail[10]) << 16; [[fallthrough]];
    case 10: k2 ^= std::uint64_t(tail[9]) << 8; [[fallthrough]];
    case 9:
      k2 ^= std::uint64_t(tail[8]);
      k2 *= c2;
      k2 = rotl64(k2, 33);
      k2 *= c1;
      h2 ^= k2;
      [[fallthrough]];
    case 8: k1 ^= std::uint64_t(tail[7]) << 56; [[fallthrough]];
    case 7: k1 ^= std::uint64_t(tail[6]) << 48; [[fallthrough]];
    case 6: k1 ^= std::uint64_t(tail[5]) << 40; [[fallthrough]];
    case 5: k1 ^= std::uint64_t(tail[4]) << 32; [[fallthrough]];
    case 4: k1 ^= std::uint64_t(tail[3]) << 24; [[fallthrough]];
    case 3: k1 ^= std::uint64_t(tail[2]) << 16; [[fallthrough]];
    case 2: k1 ^= std::uint64_t(tail[1]) << 8; [[fallthrough]];
    case 1:
      k1 ^= std::uint64_t(tail[0]);
      k1 *= c1;
      k1 = rotl64(k1, 31);
      k1 *= c2;
      h1 ^= k1;
      break;
    default: break;
  }

  h1 ^= len;
  h2 ^= len;
  h1 += h2;
  h2 += h1;
  h1 = fmix64(h1);
  h2 = fmix64(h2);
  h1 += h2;
  h2 += h1;

  std::array<std::uint8_t, 16> out{};
  store_le64(out.data(), h1);
  store_le64(out.data() + 8, h2);
  return out;
}

std::uint64_t CacheKey::low64() const { return load_le64(bytes.data()); }

std::string CacheKey::hex() const { return to_hex(bytes); }

CacheKey CacheKey::from_hex(std::string_view hex) {
  Bytes raw = fogcache::from_hex(hex);
  if (raw.size() != 16) throw std::invalid_argument("cache key must be 32 hex digits");
  CacheKey k;
  std::copy(raw.begin(), raw.end(), k.bytes.begin());
  return k;
}

CacheKey make_key(NodeId node, SimTime data_timestamp, std::uint64_t seq) {
  Bytes buf;
  buf.reserve(20);
  wire::put_u32(buf, node);
  wire::put_u64(buf, static_cast<std::uint64_t>(data_timestamp.ms()));
  wire::put_u64(buf, seq);
  return CacheKey{murmur3_x64_128(buf, 0)};
}

bool supersedes(const CacheLine& a, const CacheLine& b) {
  if (a.data_timestamp != b.data_timestamp) return a.data_timestamp > b.data_timestamp;
  return a.origin_node < b.origin_node;
}

CacheStore::CacheStore(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("cache capacity must be at least 1");
  index_.reserve(capacity);
}

std::optional<CacheLine> CacheStore::insert(CacheLine line) {
  if (!line.valid) throw std::invalid_argument("only valid lines may be inserted");

  if (auto it = index_.find(line.key); it != index_.end()) {
    auto pos = it->second;
    if (supersedes(line, *pos) || !pos->valid) *pos = std::move(line);
    order_.splice(order_.begin(), order_, pos);
    return std::nullopt;
  }

  std::optional<CacheLine> evicted;
  if (index_.size() == capacity_) {
    auto victim = std::prev(order_.end());
    index_.erase(victim->key);
    evicted = std::move(*victim);
    order_.erase(victim);
  }
  order_.push_front(std::move(line));
  index_.emplace(order_.front().key, order_.begin());
  return evicted;
}

std::optional<CacheLine> CacheStore::lookup(const CacheKey& key) {
  auto it = index_.find(key);
  if (it == index_.end() || !it->second->valid) return std::nullopt;
  order_.splice(order_.begin(), order_, it->second);
  return *it->second;
}

const CacheLine* CacheStore::peek(const CacheKey& key) const {
  auto it = index_.find(key);
  if (it == index_.end() || !it->second->valid) return nullptr;
  return &*it->second;
}

bool CacheStore::mark_clean(const CacheKey& key, SimTime data_timestamp) {
  auto it = index_.find(key);
  if (it == index_.end() || it->second->data_timestamp != data_timestamp) return false;
  it->second->dirty = false;
  return true;
}

bool CacheStore::invalidate(const CacheKey& key) {
  auto it = index_.find(key);
  if (it == index_.end()) return false;
  it->second->valid = false;
  return true;
}

std::vector<CacheKey> CacheStore::keys_by_recency() const {
  std::vector<CacheKey> keys;
  keys.reserve(order_.size());
  for (const auto& l : order_) keys.push_back(l.key);
  return keys;
}

const CacheLine& resolve(std::span<const CacheLine> responses) {
  if (responses.empty()) throw std::logic_error("resolve: empty response set");
  const CacheLine* best = &responses.front();
  for (const auto& r : responses.subspan(1))
    if (supersedes(r, *best)) best = &r;
  return *best;
}

namespace wire {

void put_u8(Bytes& out, std::uint8_t v) { out.push_back(v); }

void put_u32(Bytes& out, std::uint32_t v) {
  for (int i = 3; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(Bytes& out, std::uint64_t v) {
  for (int i = 7; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

namespace {
void require(std::span<const std::uint8_t> in, std::size_t offset, std::size_t n) {
  if (offset > in.size() || in.size() - offset < n) throw std::runtime_error("truncated encoding");
}
}  // namespace

std::uint8_t get_u8(std::span<const std::uint8_t> in, std::size_t& offset) {
  require(in, offset, 1);
  return in[offset++];
}

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t& offset) {
  require(in, offset, 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v = (v << 8) | in[offset++];
  return v;
}

std::uint64_t get_u64(std::span<const std::uint8_t> in, std::size_t& offset) {
  require(in, offset, 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | in[offset++];
  return v;
}

}  // namespace wire

void append_line(Bytes& out, const CacheLine& line) {
  out.insert(out.end(), line.key.bytes.begin(), line.key.bytes.end());
  wire::put_u8(out, line.valid ? 1 : 0);
  wire::put_u64(out, static_cast<std::uint64_t>(line.time_inserted.ms()));
  wire::put_u64(out, static_cast<std::uint64_t>(line.data_timestamp.ms()));
  wire::put_u32(out, line.origin_node);
  wire::put_u32(out, static_cast<std::uint32_t>(line.payload.size()));
  out.insert(out.end(), line.payload.begin(), line.payload.end());
}

Bytes encode_line(const CacheLine& line) {
  Bytes out;
  out.reserve(encoded_line_size(line));
  append_line(out, line);
  return out;
}

CacheLine decode_line(std::span<const std::uint8_t> in, std::size_t& offset) {
  CacheLine line;
  if (offset > in.size() || in.size() - offset < 16) throw std::runtime_error("truncated encoding");
  std::copy_n(in.begin() + static_cast<std::ptrdiff_t>(offset), 16, line.key.bytes.begin());
  offset += 16;
  line.valid = wire::get_u8(in, offset) != 0;
  line.time_inserted = SimTime::from_ms(static_cast<std::int64_t>(wire::get_u64(in, offset)));
  line.data_timestamp = SimTime::from_ms(static_cast<std::int64_t>(wire::get_u64(in, offset)));
  line.origin_node = wire::get_u32(in, offset);
  const std::uint32_t n = wire::get_u32(in, offset);
  if (in.size() - offset < n) throw std::runtime_error("truncated payload");
  line.payload.assign(in.begin() + static_cast<std::ptrdiff_t>(offset),
                      in.begin() + static_cast<std::ptrdiff_t>(offset + n));
  offset += n;
  return line;
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s;
  s.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    s.push_back(digits[b >> 4]);
    s.push_back(digits[b & 15]);
  }
  return s;
}

Bytes from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) throw std::invalid_argument("odd-length hex string");
  Bytes out;
  out.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    int hi = hex_value(hex[i]);
    int lo = hex_value(hex[i + 1]);
    if (hi < 0 || lo < 0) throw std::invalid_argument("invalid hex digit");
    out.push_back(static_cast<std::uint8_t>(hi * 16 + lo));
  }
  return out;
}

}  // namespace fogcache
