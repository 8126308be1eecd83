#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <variant>
#include <vector>

#include "dtnsim/message.hpp"

namespace dtnsim {

enum class RouterKind { Epidemic, Prophet, SprayAndWait };

struct ProphetParams {
  double p_init = 0.75;
  double beta = 0.25;
  double k = 0.0202;       // aging constant per time unit
  double time_unit = 1.0;  // seconds per aging unit
  double prune_floor = 0.0;

  friend bool operator==(const ProphetParams&, const ProphetParams&) = default;
};

enum class SawMode { Source, Binary };

struct SawParams {
  std::uint32_t copies = 6;
  SawMode mode = SawMode::Source;

  friend bool operator==(const SawParams&, const SawParams&) = default;
};

struct RouterConfig {
  RouterKind kind = RouterKind::Prophet;
  ProphetParams prophet;
  SawParams saw;

  friend bool operator==(const RouterConfig&, const RouterConfig&) = default;
};

/// Delivery predictabilities toward other nodes. Missing entries are 0.
struct ProphetState {
  std::map<NodeId, double> predictability;
  double last_aged = 0.0;
  ProphetParams params;

  double get(NodeId peer) const {
    auto it = predictability.find(peer);
    return it == predictability.end() ? 0.0 : it->second;
  }
};

/// Remaining copy tokens per buffered message.
struct SawState {
  std::map<MessageId, std::uint32_t> tokens;
  SawParams params;

  std::uint32_t get(MessageId id) const {
    auto it = tokens.find(id);
    return it == tokens.end() ? 0 : it->second;
  }
};

struct EpidemicState {};

using RouterState = std::variant<EpidemicState, ProphetState, SawState>;

RouterState make_router_state(const RouterConfig& config);

/// One candidate transfer. Copy routers always move one token and keep their
/// own copy.
struct Offer {
  MessageId message = kNoMessage;
  std::uint32_t tokens = 1;

  friend bool operator==(const Offer&, const Offer&) = default;
};

using ForwardDecision = std::vector<Offer>;

// --- PROPHET -------------------------------------------------------------------

/// P <- P * exp(-k * (now - last_aged) / time_unit), pruning tiny entries.
void prophet_age(ProphetState& state, double now);

/// Ages both tables to `now`, applies the direct update to both sides and
/// then the transitive update from each side's (post-direct) table.
void prophet_encounter(ProphetState& a, ProphetState& b, NodeId a_id, NodeId b_id, double now);

ForwardDecision prophet_select(std::span<const BufferEntry> carrier_buffer, const ProphetState& carrier,
                               const ProphetState& peer, NodeId peer_id, const MessageFilter& peer_has);

// --- Spray and Wait ------------------------------------------------------------

/// `busy` marks messages the carrier is already sending on another link;
/// their tokens are committed and they are not offered again.
ForwardDecision saw_select(std::span<const BufferEntry> carrier_buffer, const SawState& carrier,
                           NodeId carrier_id, NodeId peer_id, const MessageFilter& peer_has,
                           const MessageFilter& busy = {});

/// Upper bound on transfers a source-mode spray can cause: L copies for each
/// of M messages.
constexpr std::uint64_t saw_copy_ceiling(std::uint64_t copies, std::uint64_t messages) {
  return copies * messages;
}

// --- Epidemic ------------------------------------------------------------------

ForwardDecision epidemic_select(std::span<const BufferEntry> carrier_buffer, const MessageFilter& peer_has,
                                NodeId peer_id);

// --- Dispatch ------------------------------------------------------------------

/// Contact hook; only PROPHET keeps per-peer state.
void router_on_contact(RouterState& a, RouterState& b, NodeId a_id, NodeId b_id, double now);

/// Ages PROPHET tables to `now` before selecting.
ForwardDecision router_select(RouterState& carrier, RouterState& peer, std::span<const BufferEntry> buffer,
                              NodeId carrier_id, NodeId peer_id, const MessageFilter& peer_has,
                              const MessageFilter& busy, double now);

void router_on_created(RouterState& state, const Message& msg);
void router_on_removed(RouterState& state, MessageId id);

struct TransferOutcome {
  bool remove_from_sender = false;
};

/// Token and hop bookkeeping once a transfer completes. Appends the receiver
/// to `copy.hops`. Throws std::logic_error on token underflow.
TransferOutcome on_transfer_complete(RouterState& sender, RouterState& receiver, Message& copy,
                                     NodeId receiver_id, std::uint32_t tokens_moved);

}  // namespace dtnsim
