#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dtnsim {

/// Planar coordinate in meters (easting, northing). Inputs are expected to
/// be already projected; no reprojection happens anywhere.
struct GeoPoint {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

inline double distance(GeoPoint a, GeoPoint b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Distance from p to the segment [a, b].
double distance_to_segment(GeoPoint p, GeoPoint a, GeoPoint b);

struct Polyline {
  std::vector<GeoPoint> points;  // >= 2, no consecutive duplicates

  double length() const;
  friend bool operator==(const Polyline&, const Polyline&) = default;
};

/// Parse or structural error in geographic input. `line` is 1-based; 0 when
/// no single line is responsible.
class GeoError : public std::runtime_error {
 public:
  GeoError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// --- WKT -------------------------------------------------------------------

/// Parses a single `LINESTRING (x y, x y, ...)`. Consecutive duplicate points
/// are collapsed; fewer than two distinct points is an error.
Polyline parse_wkt_linestring(std::string_view wkt);

struct WktDocument {
  std::vector<Polyline> polylines;
  std::size_t skipped_points = 0;
};

/// One geometry per line. POINT lines are counted and skipped; blank lines
/// are ignored; any other geometry type is an error naming the line.
WktDocument parse_wkt_document(std::string_view text);

/// Shortest round-trip decimal representation, so parse(to_wkt(p)) == p.
std::string to_wkt(const Polyline& polyline);
std::string to_wkt_document(std::span<const Polyline> polylines);

// --- CSV path records --------------------------------------------------------

struct PathRecord {
  std::string geometry;   // WKT LINESTRING text
  std::string way_class;  // e.g. "residential", "track"
  std::size_t row = 0;    // 1-based line of the record in its source file

  friend bool operator==(const PathRecord&, const PathRecord&) = default;
};

struct CsvSchema {
  std::string geometry_column = "WKT";
  std::string class_column = "highway";
};

/// Reads a header-row CSV (RFC 4180 quoting). Rows with a wrong field count,
/// unterminated quotes, or a geometry that is not a LINESTRING are rejected
/// with their line number.
std::vector<PathRecord> parse_path_csv(std::string_view text, const CsvSchema& schema = {});

struct TrackSplit {
  std::vector<PathRecord> roads;
  std::vector<PathRecord> tracks;
};

/// Exact, case-sensitive class membership decides the side; order is kept.
TrackSplit split_tracks(std::span<const PathRecord> records,
                        const std::set<std::string>& track_classes = {"track"});

// --- Road graph --------------------------------------------------------------

struct Edge {
  std::size_t a = 0;
  std::size_t b = 0;
  double length = 0.0;
};

struct Adjacent {
  std::size_t vertex;
  double length;
};

/// Undirected road graph; vertices are snapped coordinates, edges are road
/// segments between consecutive polyline points.
class MapGraph {
 public:
  MapGraph() = default;

  std::span<const GeoPoint> vertices() const { return vertices_; }
  std::span<const Edge> edges() const { return edges_; }
  std::span<const Adjacent> neighbors(std::size_t v) const { return adjacency_[v]; }
  std::size_t vertex_count() const { return vertices_.size(); }

  double total_length() const;
  /// Component label per vertex, labels numbered by first vertex.
  std::vector<std::size_t> component_labels() const;
  std::size_t component_count() const;

  /// Distance from p to the nearest edge (or vertex, for edgeless graphs).
  double distance_to_graph(GeoPoint p) const;

 private:
  friend MapGraph build_map_graph(std::span<const Polyline>, double);

  std::vector<GeoPoint> vertices_;
  std::vector<Edge> edges_;
  std::vector<std::vector<Adjacent>> adjacency_;
};

/// Points within `snap_epsilon` of each other (transitively) collapse into a
/// single vertex located at the cluster's first point in input order.
MapGraph build_map_graph(std::span<const Polyline> polylines, double snap_epsilon = 0.0);

// --- Routes ------------------------------------------------------------------

struct Route {
  std::vector<GeoPoint> stops;  // >= 2, consecutive stops distinct
  std::string name;

  std::size_t stop_count() const { return stops.size(); }
};

/// Concatenates contiguous segments into one route, dropping the duplicated
/// junction point between neighbours.
Route assemble_route(std::span<const Polyline> segments, std::string name = {},
                     double snap_epsilon = 0.0);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace dtnsim
