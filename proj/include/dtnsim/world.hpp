#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "dtnsim/events.hpp"
#include "dtnsim/geodata.hpp"
#include "dtnsim/message.hpp"
#include "dtnsim/mobility.hpp"
#include "dtnsim/reports.hpp"
#include "dtnsim/rng.hpp"
#include "dtnsim/routing.hpp"

namespace dtnsim {

struct RadioConfig {
  double range = 10.0;          // meters
  double bandwidth = 256000.0;  // bytes per second

  void validate() const;
  friend bool operator==(const RadioConfig&, const RadioConfig&) = default;
};

// --- Links and transfers ---------------------------------------------------------

struct Transfer {
  MessageId message = kNoMessage;
  NodeId from = kNoNode;
  NodeId to = kNoNode;
  std::uint64_t size = 0;
  double bytes_remaining = 0.0;
  std::uint32_t tokens = 1;
};

struct Link {
  NodeId a = kNoNode;  // a < b
  NodeId b = kNoNode;
  double up_since = 0.0;
  std::optional<Transfer> transfer;
  bool prefer_b_to_a = false;  // alternates the sending side between transfers
};

using LinkKey = std::pair<NodeId, NodeId>;
using LinkSet = std::map<LinkKey, Link>;

inline LinkKey make_link_key(NodeId x, NodeId y) { return x < y ? LinkKey{x, y} : LinkKey{y, x}; }

/// All unordered pairs within `range` (closed boundary), sorted. Uses a
/// uniform grid with cell size `range`.
std::vector<LinkKey> pairs_in_range(std::span<const GeoPoint> positions, double range);

struct ConnectivityChange {
  std::vector<LinkKey> up;
  std::vector<LinkKey> down;
  std::vector<Transfer> aborted;  // transfers that were active on a downed link
};

/// Brings `links` in line with the current positions.
ConnectivityChange update_connectivity(std::span<const GeoPoint> positions, const RadioConfig& radio,
                                       LinkSet& links, double now);

/// Advances every active transfer by bandwidth * dt bytes; finished transfers
/// are removed from their link and returned in link order.
std::vector<Transfer> progress_transfers(LinkSet& links, double dt, const RadioConfig& radio);

// --- Message generation ----------------------------------------------------------

struct GeneratorConfig {
  double interval_min = 25.0;
  double interval_max = 35.0;
  std::uint64_t size_min = 512 * 1024;
  std::uint64_t size_max = 1024 * 1024;
  double start = 0.0;
  std::optional<double> end;  // defaults to the scenario duration

  void validate() const;
  friend bool operator==(const GeneratorConfig&, const GeneratorConfig&) = default;
};

/// Draws message creations: uniform gaps, distinct uniform endpoints, uniform
/// sizes, sequential ids. The first message appears one gap after `start`.
class MessageGenerator {
 public:
  MessageGenerator(GeneratorConfig config, std::vector<NodeId> eligible, Rng rng);

  /// Messages whose creation time is <= now (and within the window).
  std::vector<Message> generate(double now);

  double next_creation() const { return next_time_; }

 private:
  GeneratorConfig config_;
  std::vector<NodeId> eligible_;
  Rng rng_;
  double next_time_;
  MessageId next_id_ = 1;
};

// --- World -----------------------------------------------------------------------

struct NodeSetup {
  Mover mover;
  std::uint64_t buffer_capacity = kUnlimitedCapacity;
};

struct WorldConfig {
  double tick = 0.1;
  RadioConfig radio;
  RouterConfig router;
  std::optional<GeneratorConfig> messages;  // none: no automatic traffic
  double sample_interval = 30.0;
  std::uint64_t seed = 1;
};

struct Node {
  NodeId id;
  Mover mover;
  Buffer buffer;
  RouterState router;
  Rng rng;
  std::unordered_set<MessageId> delivered;      // messages this node received as destination
  std::unordered_map<MessageId, int> sending;   // outgoing transfers in flight
  std::unordered_map<MessageId, int> receiving; // incoming transfers in flight
};

/// Fixed-tick engine. Each step runs, in order: movement, connectivity,
/// contact hooks, transfer progress, forwarding, message generation,
/// occupancy sampling. All per-node work happens in node-id order.
///
/// An idle link first carries messages addressed to one of its ends (trying
/// the preferred direction first), then whatever the routers offer; the
/// preferred direction flips after every transfer.
class World {
 public:
  World(WorldConfig config, std::vector<NodeSetup> nodes);

  void step();
  void run_until(double horizon);

  // Dividing by an integral rate keeps 0.1 s ticks on round decimals.
  double now() const {
    const auto t = static_cast<double>(ticks_);
    return ticks_per_second_ > 0.0 ? t / ticks_per_second_ : t * config_.tick;
  }
  std::uint64_t ticks() const { return ticks_; }
  const WorldConfig& config() const { return config_; }
  const EventLog& log() const { return log_; }
  std::span<const Node> nodes() const { return nodes_; }
  const LinkSet& links() const { return links_; }
  const BufferOccupancyTimeline& occupancy() const { return occupancy_; }
  std::vector<GeoPoint> positions() const;

  /// Creates a message at `source` now (used by scripted traffic and tests).
  MessageId create_message(NodeId source, NodeId destination, std::uint64_t size);

  /// Keeps a resource (map graph, route) alive as long as the world.
  void retain(std::shared_ptr<const void> resource) { resources_.push_back(std::move(resource)); }

 private:
  void move_nodes(double from, double dt);
  void refresh_links();
  void finish_transfer(const Transfer& t);
  void start_transfers();
  bool try_start(Link& link, NodeId from, NodeId to, bool deliverable_only);
  MessageId add_message(Message msg);
  bool store(Node& node, Message msg);
  void sample();

  WorldConfig config_;
  std::vector<Node> nodes_;
  LinkSet links_;
  EventLog log_;
  std::optional<MessageGenerator> generator_;
  BufferOccupancyTimeline occupancy_;
  std::uint64_t ticks_ = 0;
  double ticks_per_second_ = 0.0;  // set when 1/tick is a whole number
  std::uint64_t next_sample_ = 1;
  MessageId next_id_ = 1;
  std::vector<std::shared_ptr<const void>> resources_;
};

}  // namespace dtnsim
