#include "dtnsim/routing.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dtnsim {

RouterState make_router_state(const RouterConfig& config) {
  switch (config.kind) {
    case RouterKind::Epidemic:
      return EpidemicState{};
    case RouterKind::Prophet:
      return ProphetState{{}, 0.0, config.prophet};
    case RouterKind::SprayAndWait:
      return SawState{{}, config.saw};
  }
  throw std::invalid_argument("unknown router kind");
}

// --- PROPHET -------------------------------------------------------------------

void prophet_age(ProphetState& state, double now) {
  if (now <= state.last_aged) return;
  const double units = (now - state.last_aged) / state.params.time_unit;
  const double factor = std::exp(-state.params.k * units);
  for (auto it = state.predictability.begin(); it != state.predictability.end();) {
    it->second *= factor;
    if (it->second < state.params.prune_floor) {
      it = state.predictability.erase(it);
    } else {
      ++it;
    }
  }
  state.last_aged = now;
}

namespace {

void direct_update(ProphetState& s, NodeId peer) {
  const double old = s.get(peer);
  s.predictability[peer] = old + (1.0 - old) * s.params.p_init;
}

// Transitive update of `self` from a snapshot of the peer's table.
void transitive_update(ProphetState& self, NodeId self_id, NodeId peer_id,
                       const std::map<NodeId, double>& peer_table) {
  const double p_peer = self.get(peer_id);
  for (const auto& [c, p_peer_c] : peer_table) {
    if (c == self_id || c == peer_id) continue;
    const double old = self.get(c);
    const double candidate = old + (1.0 - old) * p_peer * p_peer_c * self.params.beta;
    self.predictability[c] = std::max(old, candidate);
  }
}

}  // namespace

void prophet_encounter(ProphetState& a, ProphetState& b, NodeId a_id, NodeId b_id, double now) {
  if (a_id == b_id) throw std::invalid_argument("a node cannot encounter itself");
  prophet_age(a, now);
  prophet_age(b, now);
  direct_update(a, b_id);
  direct_update(b, a_id);
  const auto a_snapshot = a.predictability;
  const auto b_snapshot = b.predictability;
  transitive_update(a, a_id, b_id, b_snapshot);
  transitive_update(b, b_id, a_id, a_snapshot);
}

ForwardDecision prophet_select(std::span<const BufferEntry> carrier_buffer, const ProphetState& carrier,
                               const ProphetState& peer, NodeId peer_id, const MessageFilter& peer_has) {
  ForwardDecision direct;
  std::vector<std::pair<double, MessageId>> better;
  for (const auto& entry : carrier_buffer) {
    const auto& m = entry.message;
    if (peer_has && peer_has(m.id)) continue;
    if (m.destination == peer_id) {
      direct.push_back({m.id, 1});
      continue;
    }
    const double peer_p = peer.get(m.destination);
    if (peer_p > carrier.get(m.destination)) better.emplace_back(peer_p, m.id);
  }
  std::stable_sort(better.begin(), better.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
  for (const auto& [p, id] : better) direct.push_back({id, 1});
  return direct;
}

// --- Spray and Wait ------------------------------------------------------------

ForwardDecision saw_select(std::span<const BufferEntry> carrier_buffer, const SawState& carrier,
                           NodeId carrier_id, NodeId peer_id, const MessageFilter& peer_has,
                           const MessageFilter& busy) {
  ForwardDecision direct;
  ForwardDecision spray;
  for (const auto& entry : carrier_buffer) {
    const auto& m = entry.message;
    if (busy && busy(m.id)) continue;
    if (peer_has && peer_has(m.id)) continue;
    const std::uint32_t n = carrier.get(m.id);
    if (n == 0) continue;
    if (m.destination == peer_id) {
      direct.push_back({m.id, n});
      continue;
    }
    if (n <= 1) continue;  // wait phase
    if (carrier.params.mode == SawMode::Source) {
      if (m.source == carrier_id) spray.push_back({m.id, 1});
    } else {
      spray.push_back({m.id, n / 2});
    }
  }
  direct.insert(direct.end(), spray.begin(), spray.end());
  return direct;
}

// --- Epidemic ------------------------------------------------------------------

ForwardDecision epidemic_select(std::span<const BufferEntry> carrier_buffer, const MessageFilter& peer_has,
                                NodeId peer_id) {
  ForwardDecision direct;
  ForwardDecision rest;
  for (const auto& entry : carrier_buffer) {
    const auto& m = entry.message;
    if (peer_has && peer_has(m.id)) continue;
    (m.destination == peer_id ? direct : rest).push_back({m.id, 1});
  }
  direct.insert(direct.end(), rest.begin(), rest.end());
  return direct;
}

// --- Dispatch ------------------------------------------------------------------

void router_on_contact(RouterState& a, RouterState& b, NodeId a_id, NodeId b_id, double now) {
  auto* pa = std::get_if<ProphetState>(&a);
  auto* pb = std::get_if<ProphetState>(&b);
  if (pa && pb) prophet_encounter(*pa, *pb, a_id, b_id, now);
}

ForwardDecision router_select(RouterState& carrier, RouterState& peer, std::span<const BufferEntry> buffer,
                              NodeId carrier_id, NodeId peer_id, const MessageFilter& peer_has,
                              const MessageFilter& busy, double now) {
  if (auto* c = std::get_if<ProphetState>(&carrier)) {
    auto* p = std::get_if<ProphetState>(&peer);
    if (!p) throw std::logic_error("PROPHET carrier paired with a non-PROPHET peer");
    prophet_age(*c, now);
    prophet_age(*p, now);
    return prophet_select(buffer, *c, *p, peer_id, peer_has);
  }
  if (auto* s = std::get_if<SawState>(&carrier)) {
    return saw_select(buffer, *s, carrier_id, peer_id, peer_has, busy);
  }
  return epidemic_select(buffer, peer_has, peer_id);
}

void router_on_created(RouterState& state, const Message& msg) {
  if (auto* s = std::get_if<SawState>(&state)) s->tokens[msg.id] = s->params.copies;
}

void router_on_removed(RouterState& state, MessageId id) {
  if (auto* s = std::get_if<SawState>(&state)) s->tokens.erase(id);
}

TransferOutcome on_transfer_complete(RouterState& sender, RouterState& receiver, Message& copy,
                                     NodeId receiver_id, std::uint32_t tokens_moved) {
  copy.hops.push_back(receiver_id);
  TransferOutcome outcome;
  auto* s = std::get_if<SawState>(&sender);
  if (!s) return outcome;

  auto it = s->tokens.find(copy.id);
  if (tokens_moved == 0 || it == s->tokens.end() || it->second < tokens_moved) {
    throw std::logic_error("spray-and-wait token underflow for " + copy.name());
  }
  it->second -= tokens_moved;
  if (receiver_id == copy.destination) {
    if (it->second != 0) throw std::logic_error("destination hand-off left tokens behind for " + copy.name());
    s->tokens.erase(it);
    outcome.remove_from_sender = true;
    return outcome;
  }
  if (it->second == 0) throw std::logic_error("spray moved the last token of " + copy.name());
  if (auto* r = std::get_if<SawState>(&receiver)) r->tokens[copy.id] = tokens_moved;
  return outcome;
}

}  // namespace dtnsim
