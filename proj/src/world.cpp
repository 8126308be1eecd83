#include "dtnsim/world.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dtnsim {

namespace {

constexpr double kTimeSlack = 1e-9;
constexpr double kByteSlack = 1e-6;

}  // namespace

void RadioConfig::validate() const {
  if (!(range > 0.0)) throw std::invalid_argument("radio range must be > 0");
  if (!(bandwidth > 0.0)) throw std::invalid_argument("radio bandwidth must be > 0");
}

// --- Connectivity ----------------------------------------------------------------

std::vector<LinkKey> pairs_in_range(std::span<const GeoPoint> positions, double range) {
  struct CellHash {
    std::size_t operator()(const std::pair<std::int64_t, std::int64_t>& c) const {
      return std::hash<std::int64_t>{}(c.first * 73856093LL ^ c.second * 19349663LL);
    }
  };
  std::unordered_map<std::pair<std::int64_t, std::int64_t>, std::vector<NodeId>, CellHash> grid;
  auto cell = [&](GeoPoint p) {
    return std::make_pair(static_cast<std::int64_t>(std::floor(p.x / range)),
                          static_cast<std::int64_t>(std::floor(p.y / range)));
  };
  for (NodeId i = 0; i < positions.size(); ++i) grid[cell(positions[i])].push_back(i);

  std::vector<LinkKey> pairs;
  for (NodeId i = 0; i < positions.size(); ++i) {
    const auto [cx, cy] = cell(positions[i]);
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        auto it = grid.find({cx + dx, cy + dy});
        if (it == grid.end()) continue;
        for (NodeId j : it->second) {
          if (j > i && distance(positions[i], positions[j]) <= range) pairs.emplace_back(i, j);
        }
      }
    }
  }
  std::sort(pairs.begin(), pairs.end());
  return pairs;
}

ConnectivityChange update_connectivity(std::span<const GeoPoint> positions, const RadioConfig& radio,
                                       LinkSet& links, double now) {
  ConnectivityChange change;
  const auto pairs = pairs_in_range(positions, radio.range);

  auto link = links.begin();
  auto pair = pairs.begin();
  while (link != links.end() || pair != pairs.end()) {
    if (pair == pairs.end() || (link != links.end() && link->first < *pair)) {
      change.down.push_back(link->first);
      if (link->second.transfer) change.aborted.push_back(*link->second.transfer);
      link = links.erase(link);
    } else if (link == links.end() || *pair < link->first) {
      change.up.push_back(*pair);
      links.emplace_hint(link, *pair, Link{pair->first, pair->second, now, std::nullopt, false});
      ++pair;
    } else {
      ++link;
      ++pair;
    }
  }
  return change;
}

std::vector<Transfer> progress_transfers(LinkSet& links, double dt, const RadioConfig& radio) {
  std::vector<Transfer> done;
  const double bytes = radio.bandwidth * dt;
  for (auto& [key, link] : links) {
    if (!link.transfer) continue;
    link.transfer->bytes_remaining -= bytes;
    if (link.transfer->bytes_remaining <= kByteSlack) {
      done.push_back(*link.transfer);
      link.transfer.reset();
    }
  }
  return done;
}

// --- Message generation ----------------------------------------------------------

void GeneratorConfig::validate() const {
  if (!(interval_min >= 0.0 && interval_min <= interval_max && interval_max > 0.0)) {
    throw std::invalid_argument("message interval must satisfy 0 <= min <= max, max > 0");
  }
  if (size_min == 0 || size_min > size_max) {
    throw std::invalid_argument("message size must satisfy 0 < min <= max");
  }
  if (end && *end < start) throw std::invalid_argument("message window ends before it starts");
}

MessageGenerator::MessageGenerator(GeneratorConfig config, std::vector<NodeId> eligible, Rng rng)
    : config_(config), eligible_(std::move(eligible)), rng_(rng) {
  config_.validate();
  if (eligible_.size() < 2) throw std::invalid_argument("message generation needs at least 2 eligible nodes");
  next_time_ = config_.start + rng_.uniform(config_.interval_min, config_.interval_max);
}

std::vector<Message> MessageGenerator::generate(double now) {
  std::vector<Message> out;
  while (next_time_ <= now + kTimeSlack) {
    if (config_.end && next_time_ > *config_.end + kTimeSlack) break;
    Message m;
    m.id = next_id_++;
    const std::size_t src = rng_.uniform_index(eligible_.size());
    std::size_t dst = rng_.uniform_index(eligible_.size() - 1);
    if (dst >= src) ++dst;
    m.source = eligible_[src];
    m.destination = eligible_[dst];
    m.size = rng_.uniform_int(config_.size_min, config_.size_max);
    m.created_at = now;
    m.hops = {m.source};
    out.push_back(std::move(m));
    next_time_ += rng_.uniform(config_.interval_min, config_.interval_max);
  }
  return out;
}

// --- World -----------------------------------------------------------------------

World::World(WorldConfig config, std::vector<NodeSetup> nodes) : config_(std::move(config)) {
  if (!(config_.tick > 0.0)) throw std::invalid_argument("tick must be > 0");
  if (!(config_.sample_interval > 0.0)) throw std::invalid_argument("sample interval must be > 0");
  config_.radio.validate();
  if (const double rate = std::round(1.0 / config_.tick); rate >= 1.0 && rate * config_.tick == 1.0) {
    ticks_per_second_ = rate;
  }

  nodes_.reserve(nodes.size());
  for (NodeId id = 0; id < nodes.size(); ++id) {
    nodes_.push_back(Node{id,
                          std::move(nodes[id].mover),
                          Buffer(nodes[id].buffer_capacity),
                          make_router_state(config_.router),
                          Rng::derive(config_.seed, id, StreamPurpose::Movement),
                          {},
                          {},
                          {}});
  }
  if (config_.messages) {
    std::vector<NodeId> eligible(nodes_.size());
    for (NodeId id = 0; id < eligible.size(); ++id) eligible[id] = id;
    generator_.emplace(*config_.messages, std::move(eligible), Rng::derive(config_.seed, 0, StreamPurpose::Messages));
  }
}

std::vector<GeoPoint> World::positions() const {
  std::vector<GeoPoint> out;
  out.reserve(nodes_.size());
  for (const auto& n : nodes_) out.push_back(n.mover.position());
  return out;
}

void World::run_until(double horizon) {
  while (now() + kTimeSlack < horizon) step();
}

void World::step() {
  const double from = now();
  ++ticks_;
  move_nodes(from, config_.tick);
  refresh_links();
  for (const auto& t : progress_transfers(links_, config_.tick, config_.radio)) finish_transfer(t);
  start_transfers();
  if (generator_) {
    for (auto& m : generator_->generate(now())) add_message(std::move(m));
  }
  sample();
}

void World::move_nodes(double from, double dt) {
  for (auto& n : nodes_) n.mover.advance(from, dt, n.rng);
}

void World::refresh_links() {
  const double t = now();
  const auto change = update_connectivity(positions(), config_.radio, links_, t);
  for (const auto& tr : change.aborted) {
    if (--nodes_[tr.from].sending[tr.message] == 0) nodes_[tr.from].sending.erase(tr.message);
    if (--nodes_[tr.to].receiving[tr.message] == 0) nodes_[tr.to].receiving.erase(tr.message);
    log_.append({t, EventKind::Aborted, tr.from, tr.to, tr.message});
  }
  for (const auto& [a, b] : change.down) log_.append({t, EventKind::LinkDown, a, b});
  for (const auto& [a, b] : change.up) {
    log_.append({t, EventKind::LinkUp, a, b});
    router_on_contact(nodes_[a].router, nodes_[b].router, a, b, t);
  }
}

void World::finish_transfer(const Transfer& tr) {
  const double t = now();
  Node& from = nodes_[tr.from];
  Node& to = nodes_[tr.to];
  if (--from.sending[tr.message] == 0) from.sending.erase(tr.message);
  if (--to.receiving[tr.message] == 0) to.receiving.erase(tr.message);

  const BufferEntry* entry = from.buffer.find(tr.message);
  if (!entry) throw std::logic_error("sender lost " + message_name(tr.message) + " during a transfer");
  Message copy = entry->message;
  log_.append({t, EventKind::Relayed, from.id, to.id, tr.message});

  if (copy.destination == to.id) {
    const auto outcome = on_transfer_complete(from.router, to.router, copy, to.id, tr.tokens);
    if (to.delivered.insert(copy.id).second) {
      Event e{t, EventKind::Delivered, from.id, to.id, copy.id};
      e.hops = static_cast<std::uint32_t>(copy.hops.size() - 1);
      log_.append(e);
    }
    if (outcome.remove_from_sender) {
      from.buffer.remove(copy.id);
      router_on_removed(from.router, copy.id);
      log_.append({t, EventKind::Removed, from.id, kNoNode, copy.id});
    }
    return;
  }

  auto pinned = [&to](MessageId id) { return to.sending.contains(id); };
  if (to.buffer.contains(copy.id) || !to.buffer.can_admit(copy.size, pinned)) {
    log_.append({t, EventKind::Dropped, to.id, kNoNode, copy.id});
    return;
  }
  on_transfer_complete(from.router, to.router, copy, to.id, tr.tokens);
  store(to, std::move(copy));
}

void World::start_transfers() {
  for (auto& [key, link] : links_) {
    if (link.transfer) continue;
    const NodeId first = link.prefer_b_to_a ? link.b : link.a;
    const NodeId second = link.prefer_b_to_a ? link.a : link.b;
    // Deliveries to the peer go first in both directions, then replication.
    if (try_start(link, first, second, true) || try_start(link, second, first, true) ||
        try_start(link, first, second, false) || try_start(link, second, first, false)) {
      link.prefer_b_to_a = link.transfer->from == link.a;
    }
  }
}

bool World::try_start(Link& link, NodeId from, NodeId to, bool deliverable_only) {
  Node& s = nodes_[from];
  Node& r = nodes_[to];
  if (s.buffer.empty()) return false;

  auto peer_has = [&r](MessageId id) {
    return r.buffer.contains(id) || r.delivered.contains(id) || r.receiving.contains(id);
  };
  auto busy = [&s](MessageId id) { return s.sending.contains(id); };
  auto receiver_pinned = [&r](MessageId id) { return r.sending.contains(id); };

  const auto decision = router_select(s.router, r.router, s.buffer.entries(), from, to, peer_has, busy, now());
  for (const auto& offer : decision) {
    const BufferEntry* entry = s.buffer.find(offer.message);
    if (!entry) continue;
    const Message& m = entry->message;
    if (deliverable_only && m.destination != to) continue;
    if (m.destination != to && !r.buffer.can_admit(m.size, receiver_pinned)) continue;

    link.transfer = Transfer{m.id, from, to, m.size, static_cast<double>(m.size), offer.tokens};
    ++s.sending[m.id];
    ++r.receiving[m.id];
    log_.append({now(), EventKind::Started, from, to, m.id});
    return true;
  }
  return false;
}

MessageId World::create_message(NodeId source, NodeId destination, std::uint64_t size) {
  if (source >= nodes_.size() || destination >= nodes_.size() || source == destination) {
    throw std::invalid_argument("message endpoints must be two distinct existing nodes");
  }
  Message m;
  m.source = source;
  m.destination = destination;
  m.size = size;
  return add_message(std::move(m));
}

MessageId World::add_message(Message msg) {
  const double t = now();
  msg.id = next_id_++;
  msg.created_at = t;
  msg.hops = {msg.source};

  Event e{t, EventKind::Created, msg.source, msg.destination, msg.id};
  e.size = msg.size;
  e.value = distance(nodes_[msg.source].mover.position(), nodes_[msg.destination].mover.position());
  log_.append(e);

  const Message snapshot = msg;
  if (store(nodes_[msg.source], std::move(msg))) router_on_created(nodes_[snapshot.source].router, snapshot);
  return snapshot.id;
}

bool World::store(Node& node, Message msg) {
  const double t = now();
  const MessageId id = msg.id;
  auto pinned = [&node](MessageId m) { return node.sending.contains(m); };
  auto result = enqueue_message(node.buffer, std::move(msg), t, pinned);
  for (const auto& dropped : result.dropped) {
    router_on_removed(node.router, dropped.id);
    log_.append({t, EventKind::Dropped, node.id, kNoNode, dropped.id});
  }
  if (!result.accepted) log_.append({t, EventKind::Dropped, node.id, kNoNode, id});
  return result.accepted;
}

void World::sample() {
  const double t = now();
  while (static_cast<double>(next_sample_) * config_.sample_interval <= t + kTimeSlack) {
    std::vector<double> fractions;
    fractions.reserve(nodes_.size());
    for (const auto& n : nodes_) fractions.push_back(n.buffer.occupancy());
    occupancy_.push_back(
        sample_buffer_occupancy(fractions, static_cast<double>(next_sample_) * config_.sample_interval));
    ++next_sample_;
  }
}

}  // namespace dtnsim
