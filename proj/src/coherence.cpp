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

#include "fogcache/coherence.hpp"

#include <stdexcept>
#include <string>

namespace fogcache {

namespace {

struct WireSize {
  std::size_t operator()(const WriteAnnounce& m) const { return encoded_line_size(m.line); }
  std::size_t operator()(const ReadRequest&) const { return 8 + 16; }
  std::size_t operator()(const ReadResponse& m) const { return 8 + encoded_line_size(m.line); }
  std::size_t operator()(const Ping&) const { return 8; }
  std::size_t operator()(const PingReply&) const { return 8; }
};

}  // namespace

std::size_t wire_size(const FogMessage& msg) { return 1 + 4 + std::visit(WireSize{}, msg.body); }

Bytes encode_message(const FogMessage& msg) {
  Bytes out;
  out.reserve(wire_size(msg));
  wire::put_u8(out, static_cast<std::uint8_t>(msg.type()));
  wire::put_u32(out, msg.sender);
  std::visit(
      [&out](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, WriteAnnounce>) {
          append_line(out, m.line);
        } else if constexpr (std::is_same_v<T, ReadRequest>) {
          wire::put_u64(out, m.request_id);
          out.insert(out.end(), m.key.bytes.begin(), m.key.bytes.end());
        } else if constexpr (std::is_same_v<T, ReadResponse>) {
          wire::put_u64(out, m.request_id);
          append_line(out, m.line);
        } else {
          wire::put_u64(out, m.request_id);
        }
      },
      msg.body);
  return out;
}

FogMessage decode_message(std::span<const std::uint8_t> in) {
  std::size_t off = 0;
  FogMessage msg;
  const auto tag = wire::get_u8(in, off);
  msg.sender = wire::get_u32(in, off);
  switch (static_cast<MessageType>(tag)) {
    case MessageType::WriteAnnounce:
      msg.body = WriteAnnounce{decode_line(in, off)};
      break;
    case MessageType::ReadRequest: {
      ReadRequest r;
      r.request_id = wire::get_u64(in, off);
      if (in.size() - off < 16) throw std::runtime_error("truncated encoding");
      std::copy_n(in.begin() + static_cast<std::ptrdiff_t>(off), 16, r.key.bytes.begin());
      off += 16;
      msg.body = r;
      break;
    }
    case MessageType::ReadResponse: {
      ReadResponse r;
      r.request_id = wire::get_u64(in, off);
      r.line = decode_line(in, off);
      msg.body = std::move(r);
      break;
    }
    case MessageType::Ping:
      msg.body = Ping{wire::get_u64(in, off)};
      break;
    case MessageType::PingReply:
      msg.body = PingReply{wire::get_u64(in, off)};
      break;
    default:
      throw std::runtime_error("unknown message tag " + std::to_string(tag));
  }
  if (off != in.size()) throw std::runtime_error("trailing bytes after message");
  return msg;
}

// -- FogNode ----------------------------------------------------------------

FogNode::FogNode(Fog& fog, NodeId id, std::size_t capacity) : fog_(fog), id_(id), cache_(capacity) {}

CacheLine FogNode::generate(Bytes payload) {
  const SimTime now = fog_.scheduler().now();
  CacheLine line;
  line.key = make_key(id_, now, seq_++);
  line.time_inserted = now;
  line.data_timestamp = now;
  line.origin_node = id_;
  line.payload = std::move(payload);
  line.dirty = true;
  return publish(std::move(line));
}

CacheLine FogNode::update(const CacheKey& key, Bytes payload) {
  const SimTime now = fog_.scheduler().now();
  CacheLine line;
  line.key = key;
  line.time_inserted = now;
  line.data_timestamp = now;
  line.origin_node = id_;
  line.payload = std::move(payload);
  line.dirty = true;
  return publish(std::move(line));
}

CacheLine FogNode::publish(CacheLine line) {
  const SimTime now = fog_.scheduler().now();
  ++stats_.generated;
  fog_.log().record(Event{now, id_, EventKind::Generate, line.payload.size(), line.key.low64(), 0});

  if (fog_.config().mode == FogMode::Baseline) {
    if (auto* router = fog_.router()) router->enqueue(line);
    fog_.observe(id_, line.key);
    return line;
  }

  store_locally(line);
  fog_.observe(id_, line.key);
  fog_.broadcast(id_, FogMessage{id_, WriteAnnounce{line}});
  if (auto* router = fog_.router()) router->enqueue(line);
  return line;
}

void FogNode::store_locally(CacheLine line) {
  auto evicted = cache_.insert(std::move(line));
  if (evicted && evicted->dirty) {
    ++stats_.dirty_evictions;
    if (auto* router = fog_.router()) router->enqueue(std::move(*evicted));
  }
}

std::optional<CacheLine> FogNode::begin_read(const CacheKey& key) {
  const SimTime now = fog_.scheduler().now();

  if (fog_.config().mode == FogMode::Baseline) {
    const std::uint64_t rid = next_request_id();
    fog_.log().record(Event{now, id_, EventKind::ReadMiss, 0, key.low64(), 0});
    fog_.report_read(ReadRecord{id_, key, rid, ReadOutcome::Miss, now, now, {}, std::nullopt});
    if (auto* router = fog_.router()) {
      router->read_miss(id_, key, [this, key](std::optional<CacheLine> found) {
        if (found) fog_.observe(id_, key);
      });
    }
    return std::nullopt;
  }

  if (auto hit = cache_.lookup(key)) {
    fog_.log().record(Event{now, id_, EventKind::ReadLocalHit, 0, key.low64(), 0});
    fog_.report_read(ReadRecord{id_, key, 0, ReadOutcome::LocalHit, now, now, {}, hit});
    return hit;
  }

  const std::uint64_t rid = next_request_id();
  PendingRead p{rid, key, now, now + fog_.config().response_window, {}};
  const SimTime deadline = p.deadline;
  pending_.emplace(rid, std::move(p));
  // Scheduled before any response can be, so a response arriving exactly at
  // the deadline is late.
  fog_.scheduler().schedule(deadline, [this, rid] { finish_read(rid); });
  fog_.broadcast(id_, FogMessage{id_, ReadRequest{rid, key}});
  return std::nullopt;
}

void FogNode::finish_read(std::uint64_t request_id) {
  auto it = pending_.find(request_id);
  if (it == pending_.end()) return;
  PendingRead p = std::move(it->second);
  pending_.erase(it);
  const SimTime now = fog_.scheduler().now();

  if (!p.responses.empty()) {
    CacheLine winner = resolve(p.responses);
    fog_.log().record(Event{now, id_, EventKind::ReadFogHit, 0, p.key.low64(),
                            static_cast<std::int64_t>(p.responses.size())});
    CacheLine local = winner;
    local.time_inserted = now;
    local.dirty = false;
    store_locally(std::move(local));
    fog_.observe(id_, p.key);
    fog_.report_read(ReadRecord{id_, p.key, p.request_id, ReadOutcome::FogHit, p.issued_at, now,
                                std::move(p.responses), std::move(winner)});
    return;
  }

  fog_.log().record(Event{now, id_, EventKind::ReadMiss, 0, p.key.low64(), 0});
  fog_.report_read(ReadRecord{id_, p.key, p.request_id, ReadOutcome::Miss, p.issued_at, now, {}, std::nullopt});
  if (auto* router = fog_.router()) {
    router->read_miss(id_, p.key, [this, key = p.key](std::optional<CacheLine> found) {
      if (!found) return;
      found->time_inserted = fog_.scheduler().now();
      found->dirty = false;
      store_locally(std::move(*found));
      fog_.observe(id_, key);
    });
  }
}

std::uint64_t FogNode::ping_round(PingCallback done) {
  if (fog_.size() < 2) throw std::logic_error("ping_round needs at least two nodes");
  const SimTime now = fog_.scheduler().now();
  const std::uint64_t rid = next_request_id();
  pings_.emplace(rid, PingRound{now, fog_.size() - 1, 0, std::move(done)});
  fog_.scheduler().schedule(now + fog_.config().ping_timeout, [this, rid] {
    auto it = pings_.find(rid);
    if (it == pings_.end()) return;
    fog_.log().record(Event{fog_.scheduler().now(), id_, EventKind::PingRTT, 0, rid, -1});
    auto cb = std::move(it->second.done);
    pings_.erase(it);
    if (cb) cb(std::nullopt);
  });
  fog_.broadcast(id_, FogMessage{id_, Ping{rid}});
  return rid;
}

void FogNode::on_message(const FogMessage& msg) {
  std::visit(
      [this](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, WriteAnnounce>) on_write_announce(m);
        else if constexpr (std::is_same_v<T, ReadRequest>) on_read_request(m);
        else if constexpr (std::is_same_v<T, ReadResponse>) on_read_response(m);
        else if constexpr (std::is_same_v<T, Ping>) on_ping(m);
        else on_ping_reply(m);
      },
      msg.body);
}

void FogNode::on_write_announce(const WriteAnnounce& msg) {
  const SimTime now = fog_.scheduler().now();
  fog_.log().record(Event{now, id_, EventKind::AnnounceDelivered, 0, msg.line.key.low64(), 0});
  CacheLine copy = msg.line;
  copy.time_inserted = now;
  copy.dirty = false;
  store_locally(std::move(copy));
  fog_.observe(id_, msg.line.key);
}

void FogNode::on_read_request(const ReadRequest& msg) {
  const CacheLine* held = cache_.peek(msg.key);
  if (held == nullptr) return;
  ++stats_.requests_answered;
  CacheLine line = *held;
  line.dirty = false;
  const NodeId requester = request_owner(msg.request_id);
  auto outcome = fog_.broadcast(id_, FogMessage{id_, ReadResponse{msg.request_id, line}});
  std::optional<SimTime> arrival;
  for (const auto& d : outcome.delivered)
    if (d.receiver == requester) arrival = d.arrival;
  fog_.report_response(id_, msg.request_id, line, arrival);
}

void FogNode::on_read_response(const ReadResponse& msg) {
  if (request_owner(msg.request_id) != id_) return;  // someone else's read
  auto it = pending_.find(msg.request_id);
  if (it == pending_.end() || it->second.key != msg.line.key || !msg.line.valid) {
    ++stats_.orphan_responses;
    return;
  }
  it->second.responses.push_back(msg.line);
}

void FogNode::on_ping(const Ping& msg) { fog_.broadcast(id_, FogMessage{id_, PingReply{msg.request_id}}); }

void FogNode::on_ping_reply(const PingReply& msg) {
  if (request_owner(msg.request_id) != id_) return;
  auto it = pings_.find(msg.request_id);
  if (it == pings_.end()) return;
  if (++it->second.received < it->second.expected) return;
  const SimTime now = fog_.scheduler().now();
  const SimTime rtt = now - it->second.issued;
  fog_.log().record(Event{now, id_, EventKind::PingRTT, 0, msg.request_id, rtt.ms()});
  auto cb = std::move(it->second.done);
  pings_.erase(it);
  if (cb) cb(rtt);
}

void FogNode::on_persisted(const CacheLine& line) { cache_.mark_clean(line.key, line.data_timestamp); }

// -- Fog --------------------------------------------------------------------

Fog::Fog(Scheduler& scheduler, BroadcastMedium& medium, EventLog& log, Router* router, CoherenceConfig config)
    : scheduler_(scheduler), medium_(medium), log_(log), router_(router), config_(config) {
  if (config_.response_window <= SimTime{}) throw std::invalid_argument("response window must be positive");
  nodes_.reserve(medium.size());
  for (NodeId id = 0; id < medium.size(); ++id) nodes_.push_back(std::make_unique<FogNode>(*this, id, config_.cache_capacity));
  if (router_) {
    router_->set_commit_listener([this](const CacheLine& line) {
      if (line.origin_node < nodes_.size()) nodes_[line.origin_node]->on_persisted(line);
    });
  }
}

BroadcastOutcome Fog::broadcast(NodeId sender, FogMessage msg) {
  const std::size_t bytes = wire_size(msg);
  const bool announce = msg.type() == MessageType::WriteAnnounce;
  const std::uint64_t detail = announce ? std::get<WriteAnnounce>(msg.body).line.key.low64() : 0;
  auto shared = std::make_shared<const FogMessage>(std::move(msg));
  auto outcome = medium_.broadcast(sender, bytes, [this, shared](NodeId k) { nodes_[k]->on_message(*shared); });

  const SimTime now = scheduler_.now();
  log_.record(Event{now, sender, EventKind::BytesLAN, outcome.bytes_charged, detail, static_cast<std::int64_t>(bytes)});
  if (announce) {
    log_.record(Event{now, sender, EventKind::AnnounceSent, bytes, detail,
                      static_cast<std::int64_t>(outcome.delivered.size())});
    for (NodeId k : outcome.lost) log_.record(Event{now, k, EventKind::AnnounceLost, 0, detail, 0});
  }
  return outcome;
}

std::optional<CacheLine> Fog::fog_wide_read(const CacheKey& key) const {
  std::vector<CacheLine> copies;
  for (const auto& n : nodes_)
    if (const CacheLine* l = n->cache().peek(key)) copies.push_back(*l);
  if (copies.empty()) return std::nullopt;
  return resolve(copies);
}

std::uint64_t Fog::orphan_responses() const {
  std::uint64_t n = 0;
  for (const auto& node : nodes_) n += node->stats().orphan_responses;
  return n;
}

}  // namespace fogcache
