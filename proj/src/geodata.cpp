#include "dtnsim/geodata.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <queue>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "dtnsim/text.hpp"

namespace dtnsim {

double distance_to_segment(GeoPoint p, GeoPoint a, GeoPoint b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  if (len2 == 0.0) return distance(p, a);
  double t = ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2;
  t = std::clamp(t, 0.0, 1.0);
  return distance(p, GeoPoint{a.x + t * dx, a.y + t * dy});
}

double Polyline::length() const {
  double total = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) total += distance(points[i - 1], points[i]);
  return total;
}

namespace {

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

// Splits "KEYWORD rest" into the upper-cased keyword and the remainder.
std::pair<std::string, std::string_view> geometry_keyword(std::string_view wkt) {
  wkt = trim(wkt);
  std::size_t i = 0;
  while (i < wkt.size() && std::isalpha(static_cast<unsigned char>(wkt[i]))) ++i;
  return {upper(wkt.substr(0, i)), trim(wkt.substr(i))};
}

GeoPoint parse_coordinate(std::string_view text) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  text = trim(text);
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) tokens.push_back(text.substr(start, i - start));
  }
  if (tokens.size() != 2) {
    throw GeoError("expected 'x y' coordinate, got '" + std::string(text) + "'");
  }
  const auto x = parse_double(tokens[0]);
  const auto y = parse_double(tokens[1]);
  if (!x || !y || !std::isfinite(*x) || !std::isfinite(*y)) {
    throw GeoError("invalid coordinate '" + std::string(text) + "'");
  }
  return {*x, *y};
}

}  // namespace

Polyline parse_wkt_linestring(std::string_view wkt) {
  auto [keyword, rest] = geometry_keyword(wkt);
  if (keyword != "LINESTRING") {
    throw GeoError("expected LINESTRING, got '" + (keyword.empty() ? std::string(trim(wkt)) : keyword) + "'");
  }
  if (upper(rest) == "EMPTY") throw GeoError("LINESTRING needs at least 2 points");
  if (rest.size() < 2 || rest.front() != '(' || rest.back() != ')') {
    throw GeoError("malformed LINESTRING body '" + std::string(rest) + "'");
  }
  rest = rest.substr(1, rest.size() - 2);

  Polyline line;
  if (!trim(rest).empty()) {
    for (auto part : split(rest, ',')) {
      const GeoPoint p = parse_coordinate(part);
      if (line.points.empty() || !(line.points.back() == p)) line.points.push_back(p);
    }
  }
  if (line.points.size() < 2) throw GeoError("LINESTRING needs at least 2 distinct points");
  return line;
}

WktDocument parse_wkt_document(std::string_view text) {
  WktDocument doc;
  std::size_t line_no = 0;
  for (auto line : split(text, '\n')) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    const auto keyword = geometry_keyword(line).first;
    if (keyword == "POINT") {
      ++doc.skipped_points;
      continue;
    }
    if (keyword != "LINESTRING") {
      throw GeoError("unsupported geometry type '" + keyword + "'", line_no);
    }
    try {
      doc.polylines.push_back(parse_wkt_linestring(line));
    } catch (const GeoError& e) {
      throw GeoError(e.what(), line_no);
    }
  }
  return doc;
}

std::string to_wkt(const Polyline& polyline) {
  std::string out = "LINESTRING (";
  for (std::size_t i = 0; i < polyline.points.size(); ++i) {
    if (i) out += ", ";
    out += format_number(polyline.points[i].x);
    out += ' ';
    out += format_number(polyline.points[i].y);
  }
  out += ')';
  return out;
}

std::string to_wkt_document(std::span<const Polyline> polylines) {
  std::string out;
  for (const auto& p : polylines) {
    out += to_wkt(p);
    out += '\n';
  }
  return out;
}

// --- CSV -----------------------------------------------------------------------

namespace {

struct CsvRow {
  std::vector<std::string> fields;
  std::size_t line = 0;
};

std::vector<CsvRow> read_csv(std::string_view text) {
  std::vector<CsvRow> rows;
  CsvRow row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;
  row.line = 1;

  auto end_field = [&] {
    row.fields.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    const bool blank = row.fields.size() == 1 && trim(row.fields[0]).empty();
    if (!blank) rows.push_back(std::move(row));
    row = CsvRow{};
    row.line = line + 1;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field_started) throw GeoError("unexpected quote inside unquoted field", line);
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        break;
      case '\n':
        end_row();
        ++line;
        break;
      default:
        field += c;
        field_started = true;
    }
  }
  if (in_quotes) throw GeoError("unterminated quoted field", row.line);
  if (field_started || !field.empty() || !row.fields.empty()) end_row();
  return rows;
}

}  // namespace

std::vector<PathRecord> parse_path_csv(std::string_view text, const CsvSchema& schema) {
  const auto rows = read_csv(text);
  if (rows.empty()) throw GeoError("CSV has no header row");

  const auto& header = rows.front().fields;
  auto column = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (trim(header[i]) == name) return i;
    }
    throw GeoError("missing column '" + name + "' in header", rows.front().line);
  };
  const std::size_t geom_col = column(schema.geometry_column);
  const std::size_t class_col = column(schema.class_column);

  std::vector<PathRecord> records;
  records.reserve(rows.size() - 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.fields.size() != header.size()) {
      throw GeoError("expected " + std::to_string(header.size()) + " fields, found " +
                         std::to_string(row.fields.size()),
                     row.line);
    }
    PathRecord rec{row.fields[geom_col], row.fields[class_col], row.line};
    try {
      (void)parse_wkt_linestring(rec.geometry);
    } catch (const GeoError& e) {
      throw GeoError(std::string("bad geometry: ") + e.what(), row.line);
    }
    records.push_back(std::move(rec));
  }
  return records;
}

TrackSplit split_tracks(std::span<const PathRecord> records,
                        const std::set<std::string>& track_classes) {
  if (track_classes.empty()) throw std::invalid_argument("track class set must not be empty");
  TrackSplit out;
  for (const auto& rec : records) {
    (track_classes.contains(rec.way_class) ? out.tracks : out.roads).push_back(rec);
  }
  return out;
}

// --- Graph ---------------------------------------------------------------------

namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  // The smaller index always becomes the root, so roots are first-seen points.
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<std::size_t> parent_;
};

struct PairHash {
  std::size_t operator()(const std::pair<std::uint64_t, std::uint64_t>& p) const {
    return std::hash<std::uint64_t>{}(p.first * 0x9e3779b97f4a7c15ULL ^ p.second);
  }
};

std::uint64_t coordinate_bits(double v) {
  if (v == 0.0) v = 0.0;  // fold -0 onto +0
  return std::bit_cast<std::uint64_t>(v);
}

}  // namespace

MapGraph build_map_graph(std::span<const Polyline> polylines, double snap_epsilon) {
  if (!(snap_epsilon >= 0.0)) throw GeoError("snap epsilon must be >= 0");
  if (polylines.empty()) throw GeoError("cannot build a map graph from zero polylines");

  std::vector<GeoPoint> points;
  for (const auto& line : polylines) points.insert(points.end(), line.points.begin(), line.points.end());

  DisjointSets sets(points.size());
  if (snap_epsilon == 0.0) {
    std::unordered_map<std::pair<std::uint64_t, std::uint64_t>, std::size_t, PairHash> seen;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto key = std::make_pair(coordinate_bits(points[i].x), coordinate_bits(points[i].y));
      auto [it, inserted] = seen.try_emplace(key, i);
      if (!inserted) sets.unite(it->second, i);
    }
  } else {
    using Cell = std::pair<std::uint64_t, std::uint64_t>;
    std::unordered_map<Cell, std::vector<std::size_t>, PairHash> grid;
    auto cell_of = [&](double v) { return static_cast<std::int64_t>(std::floor(v / snap_epsilon)); };
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto cx = cell_of(points[i].x);
      const auto cy = cell_of(points[i].y);
      for (std::int64_t dx = -1; dx <= 1; ++dx) {
        for (std::int64_t dy = -1; dy <= 1; ++dy) {
          auto it = grid.find({static_cast<std::uint64_t>(cx + dx), static_cast<std::uint64_t>(cy + dy)});
          if (it == grid.end()) continue;
          for (std::size_t j : it->second) {
            if (distance(points[i], points[j]) <= snap_epsilon) sets.unite(i, j);
          }
        }
      }
      grid[{static_cast<std::uint64_t>(cx), static_cast<std::uint64_t>(cy)}].push_back(i);
    }
  }

  MapGraph g;
  constexpr auto unset = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> vertex_of_root(points.size(), unset);
  std::vector<std::size_t> vertex_of_point(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const std::size_t root = sets.find(i);
    if (vertex_of_root[root] == unset) {
      vertex_of_root[root] = g.vertices_.size();
      g.vertices_.push_back(points[root]);
    }
    vertex_of_point[i] = vertex_of_root[root];
  }

  std::unordered_set<std::pair<std::uint64_t, std::uint64_t>, PairHash> seen_edges;
  std::size_t offset = 0;
  for (const auto& line : polylines) {
    for (std::size_t k = 1; k < line.points.size(); ++k) {
      std::size_t a = vertex_of_point[offset + k - 1];
      std::size_t b = vertex_of_point[offset + k];
      if (a == b) continue;
      if (!seen_edges.insert({std::min(a, b), std::max(a, b)}).second) continue;
      g.edges_.push_back({a, b, distance(g.vertices_[a], g.vertices_[b])});
    }
    offset += line.points.size();
  }

  g.adjacency_.resize(g.vertices_.size());
  for (const auto& e : g.edges_) {
    g.adjacency_[e.a].push_back({e.b, e.length});
    g.adjacency_[e.b].push_back({e.a, e.length});
  }
  return g;
}

double MapGraph::total_length() const {
  double total = 0.0;
  for (const auto& e : edges_) total += e.length;
  return total;
}

std::vector<std::size_t> MapGraph::component_labels() const {
  constexpr auto unset = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> label(vertices_.size(), unset);
  std::size_t next = 0;
  for (std::size_t start = 0; start < vertices_.size(); ++start) {
    if (label[start] != unset) continue;
    std::queue<std::size_t> frontier;
    frontier.push(start);
    label[start] = next;
    while (!frontier.empty()) {
      const std::size_t v = frontier.front();
      frontier.pop();
      for (const auto& adj : adjacency_[v]) {
        if (label[adj.vertex] == unset) {
          label[adj.vertex] = next;
          frontier.push(adj.vertex);
        }
      }
    }
    ++next;
  }
  return label;
}

std::size_t MapGraph::component_count() const {
  const auto labels = component_labels();
  return labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
}

double MapGraph::distance_to_graph(GeoPoint p) const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& e : edges_) best = std::min(best, distance_to_segment(p, vertices_[e.a], vertices_[e.b]));
  if (edges_.empty()) {
    for (const auto& v : vertices_) best = std::min(best, distance(p, v));
  }
  return best;
}

// --- Routes --------------------------------------------------------------------

Route assemble_route(std::span<const Polyline> segments, std::string name, double snap_epsilon) {
  if (segments.empty()) throw GeoError("route needs at least one segment");
  Route route;
  route.name = std::move(name);
  route.stops = segments.front().points;
  for (std::size_t i = 1; i < segments.size(); ++i) {
    const auto& seg = segments[i].points;
    if (seg.empty()) throw GeoError("route segment " + std::to_string(i) + " is empty");
    const double gap = distance(route.stops.back(), seg.front());
    if (gap > snap_epsilon) {
      std::ostringstream msg;
      msg << "route segments " << i - 1 << " and " << i << " are not contiguous: gap of "
          << format_number(gap) << " m between (" << format_number(route.stops.back().x) << ' '
          << format_number(route.stops.back().y) << ") and (" << format_number(seg.front().x) << ' '
          << format_number(seg.front().y) << ')';
      throw GeoError(msg.str());
    }
    for (std::size_t k = 1; k < seg.size(); ++k) {
      if (!(seg[k] == route.stops.back())) route.stops.push_back(seg[k]);
    }
  }
  if (route.stops.size() < 2) throw GeoError("route needs at least 2 distinct stops");
  return route;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw GeoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw GeoError("cannot write '" + path.string() + "'");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

}  // namespace dtnsim
