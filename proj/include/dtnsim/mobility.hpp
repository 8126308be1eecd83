#pragma once

#include <cstddef>
#include <deque>
#include <variant>
#include <vector>

#include "dtnsim/geodata.hpp"
#include "dtnsim/rng.hpp"

namespace dtnsim {

/// Per-class speed (m/s) and pause (s) ranges; all draws are uniform.
struct SpeedProfile {
  double min_speed = 0.5;
  double max_speed = 1.5;
  double wait_min = 0.0;
  double wait_max = 120.0;

  static SpeedProfile pedestrian() { return {0.5, 1.5, 0.0, 120.0}; }
  static SpeedProfile vehicle() { return {2.7, 13.9, 0.0, 0.0}; }

  /// Throws std::invalid_argument unless 0 <= min <= max for both ranges.
  void validate() const;

  friend bool operator==(const SpeedProfile&, const SpeedProfile&) = default;
};

// --- Route traversal -----------------------------------------------------------

enum class Heading { Forward, Backward };

struct RouteCursor {
  std::size_t stop_index = 0;
  Heading heading = Heading::Forward;

  friend bool operator==(const RouteCursor&, const RouteCursor&) = default;
};

/// Evenly spaced starting stops for `n_hosts` buses on one route. A single
/// host gets step = stops - 1, otherwise step = stops / hosts (integer).
/// Host i starts at i * step, or at stop 0 when that overshoots the route.
std::vector<RouteCursor> place_nodes_on_route(const Route& route, std::size_t n_hosts, bool reverse);

/// One stop along the heading, reflecting at either terminus.
RouteCursor next_route_leg(RouteCursor cursor, std::size_t stop_count);

// --- Map paths -----------------------------------------------------------------

/// Minimum-length vertex path from `from` to `to` (inclusive of both ends),
/// empty when unreachable. Ties resolve toward lower vertex indices.
std::vector<std::size_t> shortest_path(const MapGraph& graph, std::size_t from, std::size_t to);

/// Picks a destination uniformly among vertices reachable from `from_vertex`
/// (itself excluded) and returns the shortest path to it, without the start
/// vertex. Empty when `from_vertex` is isolated.
std::vector<std::size_t> pick_random_path(const MapGraph& graph, std::size_t from_vertex, Rng& rng);

// --- Kinematics ----------------------------------------------------------------

struct Waypoint {
  GeoPoint point;
  std::size_t tag = 0;  // vertex index for map movement, stop index for routes
};

struct WaypointState {
  GeoPoint position;
  std::deque<Waypoint> path;
  std::size_t last_tag = 0;  // tag of the last waypoint reached (or spawn)
  double leg_speed = 0.0;
  double wait_until = 0.0;
};

/// Random-waypoint planner constrained to a road graph.
class MapPlanner {
 public:
  explicit MapPlanner(const MapGraph& graph) : graph_(&graph) {}
  std::vector<Waypoint> next_path(std::size_t from_tag, Rng& rng);

 private:
  const MapGraph* graph_;
};

/// Stop-to-stop ping-pong planner along one route.
class RoutePlanner {
 public:
  RoutePlanner(const Route& route, RouteCursor cursor) : route_(&route), cursor_(cursor) {}
  std::vector<Waypoint> next_path(std::size_t from_tag, Rng& rng);
  RouteCursor cursor() const { return cursor_; }

 private:
  const Route* route_;
  RouteCursor cursor_;
};

using Planner = std::variant<MapPlanner, RoutePlanner>;

/// Moves the state along its path for `dt` seconds starting at `now`.
/// Residual distance carries across waypoints; an exhausted path starts a
/// uniform pause, after which the planner supplies a new path and a new leg
/// speed is drawn. Leftover time within the tick is used after each event.
void advance(WaypointState& state, double now, double dt, const SpeedProfile& profile, Planner& planner,
             Rng& rng);

/// Pure kinematics: move along `state.path` at `state.leg_speed` for up to
/// `dt` seconds. Returns the unused time (> 0 only if the path ran out).
double walk(WaypointState& state, double dt);

/// A node's complete movement model.
class Mover {
 public:
  Mover(SpeedProfile profile, Planner planner, GeoPoint start, std::size_t start_tag);

  void advance(double now, double dt, Rng& rng) {
    dtnsim::advance(state_, now, dt, profile_, planner_, rng);
  }
  GeoPoint position() const { return state_.position; }
  const WaypointState& state() const { return state_; }
  const SpeedProfile& profile() const { return profile_; }
  const Planner& planner() const { return planner_; }

 private:
  SpeedProfile profile_;
  Planner planner_;
  WaypointState state_;
};

}  // namespace dtnsim
