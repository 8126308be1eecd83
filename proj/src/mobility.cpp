#include "dtnsim/mobility.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <queue>
#include <stdexcept>

namespace dtnsim {

void SpeedProfile::validate() const {
  if (!(min_speed >= 0.0 && min_speed <= max_speed)) {
    throw std::invalid_argument("speed range must satisfy 0 <= min <= max");
  }
  if (!(wait_min >= 0.0 && wait_min <= wait_max)) {
    throw std::invalid_argument("wait range must satisfy 0 <= min <= max");
  }
}

std::vector<RouteCursor> place_nodes_on_route(const Route& route, std::size_t n_hosts, bool reverse) {
  if (n_hosts == 0) throw std::invalid_argument("route placement needs at least one host");
  const std::size_t stops = route.stop_count();
  if (stops < 2) throw std::invalid_argument("route placement needs at least 2 stops");

  // A single host would divide by one and land on the far terminus; the
  // n == 1 branch keeps the full route length as the step instead.
  const std::size_t step = n_hosts == 1 ? stops - 1 : stops / n_hosts;
  const Heading heading = reverse ? Heading::Backward : Heading::Forward;

  std::vector<RouteCursor> cursors;
  cursors.reserve(n_hosts);
  for (std::size_t i = 0; i < n_hosts; ++i) {
    std::size_t index = i * step;
    if (index >= stops) index = 0;
    cursors.push_back({index, heading});
  }
  return cursors;
}

RouteCursor next_route_leg(RouteCursor cursor, std::size_t stop_count) {
  const std::size_t last = stop_count - 1;
  if (cursor.heading == Heading::Forward && cursor.stop_index >= last) cursor.heading = Heading::Backward;
  if (cursor.heading == Heading::Backward && cursor.stop_index == 0) cursor.heading = Heading::Forward;

  cursor.stop_index += cursor.heading == Heading::Forward ? 1 : -1;

  if (cursor.stop_index == last) cursor.heading = Heading::Backward;
  if (cursor.stop_index == 0) cursor.heading = Heading::Forward;
  return cursor;
}

std::vector<std::size_t> shortest_path(const MapGraph& graph, std::size_t from, std::size_t to) {
  const std::size_t n = graph.vertex_count();
  constexpr double inf = std::numeric_limits<double>::infinity();
  constexpr auto none = std::numeric_limits<std::size_t>::max();
  std::vector<double> dist(n, inf);
  std::vector<std::size_t> prev(n, none);

  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[from] = 0.0;
  heap.push({0.0, from});
  while (!heap.empty()) {
    auto [d, v] = heap.top();
    heap.pop();
    if (d > dist[v]) continue;
    if (v == to) break;
    for (const auto& adj : graph.neighbors(v)) {
      const double nd = d + adj.length;
      if (nd < dist[adj.vertex] || (nd == dist[adj.vertex] && v < prev[adj.vertex])) {
        dist[adj.vertex] = nd;
        prev[adj.vertex] = v;
        heap.push({nd, adj.vertex});
      }
    }
  }
  if (dist[to] == inf) return {};

  std::vector<std::size_t> path;
  for (std::size_t v = to; v != none; v = prev[v]) path.push_back(v);
  std::reverse(path.begin(), path.end());
  return path;
}

std::vector<std::size_t> pick_random_path(const MapGraph& graph, std::size_t from_vertex, Rng& rng) {
  // Reachable set in ascending index order keeps the draw deterministic.
  std::vector<char> seen(graph.vertex_count(), 0);
  std::vector<std::size_t> stack{from_vertex};
  seen[from_vertex] = 1;
  while (!stack.empty()) {
    const std::size_t v = stack.back();
    stack.pop_back();
    for (const auto& adj : graph.neighbors(v)) {
      if (!seen[adj.vertex]) {
        seen[adj.vertex] = 1;
        stack.push_back(adj.vertex);
      }
    }
  }
  std::vector<std::size_t> candidates;
  for (std::size_t v = 0; v < seen.size(); ++v) {
    if (seen[v] && v != from_vertex) candidates.push_back(v);
  }
  if (candidates.empty()) return {};

  const std::size_t destination = candidates[rng.uniform_index(candidates.size())];
  auto path = shortest_path(graph, from_vertex, destination);
  path.erase(path.begin());
  return path;
}

std::vector<Waypoint> MapPlanner::next_path(std::size_t from_tag, Rng& rng) {
  std::vector<Waypoint> out;
  for (std::size_t v : pick_random_path(*graph_, from_tag, rng)) {
    out.push_back({graph_->vertices()[v], v});
  }
  return out;
}

std::vector<Waypoint> RoutePlanner::next_path(std::size_t, Rng&) {
  cursor_ = next_route_leg(cursor_, route_->stop_count());
  return {{route_->stops[cursor_.stop_index], cursor_.stop_index}};
}

double walk(WaypointState& state, double dt) {
  double budget = state.leg_speed * dt;
  while (!state.path.empty()) {
    const GeoPoint target = state.path.front().point;
    const double to_go = distance(state.position, target);
    if (to_go > budget) {
      if (budget > 0.0) {
        const double f = budget / to_go;
        state.position.x += (target.x - state.position.x) * f;
        state.position.y += (target.y - state.position.y) * f;
      }
      return 0.0;
    }
    budget -= to_go;
    state.position = target;
    state.last_tag = state.path.front().tag;
    state.path.pop_front();
  }
  return state.leg_speed > 0.0 ? budget / state.leg_speed : 0.0;
}

void advance(WaypointState& state, double now, double dt, const SpeedProfile& profile, Planner& planner,
             Rng& rng) {
  double t = now;
  const double end = now + dt;
  while (t < end) {
    if (state.path.empty()) {
      if (state.wait_until >= end) return;
      t = std::max(t, state.wait_until);
      auto next = std::visit([&](auto& p) { return p.next_path(state.last_tag, rng); }, planner);
      if (next.empty()) {
        // Isolated start vertex: sit out one pause period and retry.
        state.wait_until = t + rng.uniform(profile.wait_min, profile.wait_max);
        return;
      }
      state.path.assign(next.begin(), next.end());
      state.leg_speed = rng.uniform(profile.min_speed, profile.max_speed);
    }
    const double remaining = end - t;
    const double unused = walk(state, remaining);
    if (!state.path.empty() || state.leg_speed <= 0.0) return;
    t = end - unused;
    state.wait_until = t + rng.uniform(profile.wait_min, profile.wait_max);
    if (unused <= 0.0) return;
  }
}

Mover::Mover(SpeedProfile profile, Planner planner, GeoPoint start, std::size_t start_tag)
    : profile_(profile), planner_(std::move(planner)) {
  profile_.validate();
  state_.position = start;
  state_.last_tag = start_tag;
}

}  // namespace dtnsim
