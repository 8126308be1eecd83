#include "dtnsim/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <map>
#include <memory>
#include <set>

#include "dtnsim/geodata.hpp"
#include "dtnsim/text.hpp"

namespace dtnsim {

std::filesystem::path ScenarioConfig::resolve(const std::string& file) const {
  const std::filesystem::path p(file);
  return p.is_absolute() ? p : base_dir / p;
}

std::optional<double> parse_quantity(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  if (text.back() == 'B' || text.back() == 'b') text.remove_suffix(1);
  double multiplier = 1.0;
  if (!text.empty()) {
    switch (text.back()) {
      case 'k':
      case 'K': multiplier = 1024.0; break;
      case 'M': multiplier = 1024.0 * 1024.0; break;
      case 'G': multiplier = 1024.0 * 1024.0 * 1024.0; break;
      default: break;
    }
    if (multiplier != 1.0) text.remove_suffix(1);
  }
  const auto v = parse_double(text);
  if (!v || !std::isfinite(*v)) return std::nullopt;
  return *v * multiplier;
}

namespace {

constexpr std::string_view kScalarKeys[] = {
    "scenario.duration", "scenario.tick",  "map.snap",           "radio.range",
    "radio.bandwidth",   "router",         "prophet.pinit",      "prophet.beta",
    "prophet.k",         "prophet.timeUnit", "prophet.pruneFloor", "saw.copies",       "saw.mode",
    "messages.start",    "messages.end",   "reports.bufferInterval", "messages.interval",
    "messages.size",
};
constexpr std::string_view kGroupKeys[] = {"count", "class", "speed", "wait", "buffer", "route", "reverse"};

struct GroupDraft {
  std::optional<std::size_t> count;
  std::optional<NodeClass> node_class;
  std::optional<std::pair<double, double>> speed;
  std::optional<std::pair<double, double>> wait;
  std::optional<std::uint64_t> buffer;
  std::optional<std::size_t> route;
  std::optional<bool> reverse;
  std::size_t line = 0;
};

struct Draft {
  ScenarioConfig config;
  bool router_set = false;
  std::map<std::size_t, GroupDraft> groups;
  std::map<std::string, std::size_t, std::less<>> lines;
};

std::string_view class_name(NodeClass c) {
  switch (c) {
    case NodeClass::Pedestrian: return "pedestrian";
    case NodeClass::Vehicle: return "vehicle";
    case NodeClass::Bus: return "bus";
  }
  return "pedestrian";
}

std::string_view router_name(RouterKind k) {
  switch (k) {
    case RouterKind::Epidemic: return "epidemic";
    case RouterKind::Prophet: return "prophet";
    case RouterKind::SprayAndWait: return "saw";
  }
  return "prophet";
}

class ValueReader {
 public:
  ValueReader(std::string_view key, std::string_view value, std::size_t line)
      : key_(key), value_(trim(value)), line_(line) {}

  [[noreturn]] void fail(const std::string& expected) const {
    throw ConfigError("key '" + std::string(key_) + "': expected " + expected + ", got '" + std::string(value_) + "'",
                      line_);
  }

  double number() const {
    const auto v = parse_double(value_);
    if (!v || !std::isfinite(*v)) fail("a number");
    return *v;
  }
  double quantity() const {
    const auto v = parse_quantity(value_);
    if (!v) fail("a number with optional k/M/G suffix");
    return *v;
  }
  std::uint64_t bytes() const {
    const double v = quantity();
    if (v < 0 || v != std::floor(v) || v > 1.8e19) fail("a whole number of bytes");
    return static_cast<std::uint64_t>(v);
  }
  std::uint64_t integer() const {
    const auto v = parse_uint(value_);
    if (!v) fail("a non-negative integer");
    return *v;
  }
  bool boolean() const {
    if (value_ == "true" || value_ == "yes" || value_ == "1") return true;
    if (value_ == "false" || value_ == "no" || value_ == "0") return false;
    fail("true or false");
  }
  std::vector<std::string_view> pair_parts() const {
    return split(value_, value_.find(':') != std::string_view::npos ? ':' : ',');
  }
  std::pair<double, double> range() const {
    const auto parts = pair_parts();
    if (parts.size() != 2) fail("'lo,hi'");
    const auto lo = parse_double(parts[0]);
    const auto hi = parse_double(parts[1]);
    if (!lo || !hi) fail("'lo,hi'");
    return {*lo, *hi};
  }
  std::pair<std::uint64_t, std::uint64_t> byte_range() const {
    const auto parts = pair_parts();
    if (parts.size() != 2) fail("'lo,hi'");
    return {ValueReader(key_, parts[0], line_).bytes(), ValueReader(key_, parts[1], line_).bytes()};
  }
  std::vector<std::string> list() const {
    std::vector<std::string> out;
    if (value_.empty()) return out;
    for (auto part : split(value_, ',')) {
      part = trim(part);
      if (part.empty()) fail("a comma-separated list without empty items");
      out.emplace_back(part);
    }
    return out;
  }
  std::string text() const { return std::string(value_); }

 private:
  std::string_view key_;
  std::string_view value_;
  std::size_t line_;
};

void check_files(const ScenarioConfig& c, const std::vector<std::string>& files, std::size_t line) {
  for (const auto& f : files) {
    if (!std::filesystem::exists(c.resolve(f))) throw ConfigError("file not found: '" + f + "'", line);
  }
}

void apply_group_key(Draft& d, std::size_t index, std::string_view field, const ValueReader& v, std::size_t line) {
  auto& g = d.groups[index];
  if (!g.line) g.line = line;
  if (field == "count") {
    g.count = v.integer();
  } else if (field == "class") {
    const auto t = v.text();
    if (t == "pedestrian") g.node_class = NodeClass::Pedestrian;
    else if (t == "vehicle") g.node_class = NodeClass::Vehicle;
    else if (t == "bus") g.node_class = NodeClass::Bus;
    else v.fail("pedestrian, vehicle or bus");
  } else if (field == "speed") {
    g.speed = v.range();
  } else if (field == "wait") {
    g.wait = v.range();
  } else if (field == "buffer") {
    g.buffer = v.text() == "unlimited" ? kUnlimitedCapacity : v.bytes();
  } else if (field == "route") {
    g.route = v.integer();
  } else if (field == "reverse") {
    g.reverse = v.boolean();
  }
}

// Splits "group12.count" into (12, "count"); nullopt if not a group key.
std::optional<std::pair<std::size_t, std::string_view>> group_key(std::string_view key) {
  if (!key.starts_with("group")) return std::nullopt;
  const auto dot = key.find('.');
  if (dot == std::string_view::npos) return std::nullopt;
  const auto n = parse_uint(key.substr(5, dot - 5));
  if (!n || *n == 0) return std::nullopt;
  const auto field = key.substr(dot + 1);
  if (std::find(std::begin(kGroupKeys), std::end(kGroupKeys), field) == std::end(kGroupKeys)) return std::nullopt;
  return std::make_pair(static_cast<std::size_t>(*n), field);
}

void apply_key(Draft& d, std::string_view key, std::string_view value, std::size_t line) {
  ScenarioConfig& c = d.config;
  const ValueReader v(key, value, line);
  d.lines[std::string(key)] = line;

  if (auto g = group_key(key)) {
    apply_group_key(d, g->first, g->second, v, line);
    return;
  }
  if (key == "scenario.name") c.name = v.text();
  else if (key == "scenario.duration") c.duration = v.number();
  else if (key == "scenario.tick") c.tick = v.number();
  else if (key == "scenario.seeds") {
    c.seeds.clear();
    for (const auto& s : v.list()) {
      const auto n = parse_uint(s);
      if (!n) v.fail("a list of non-negative integers");
      c.seeds.push_back(*n);
    }
  } else if (key == "scenario.out") c.out = v.text();
  else if (key == "map.files") {
    c.map_files = v.list();
    check_files(c, c.map_files, line);
  } else if (key == "map.snap") c.snap = v.number();
  else if (key == "routes.files") {
    c.route_files = v.list();
    check_files(c, c.route_files, line);
  } else if (key == "radio.range") c.radio.range = v.number();
  else if (key == "radio.bandwidth") c.radio.bandwidth = v.quantity();
  else if (key == "router") {
    const auto t = v.text();
    if (t == "prophet") c.router.kind = RouterKind::Prophet;
    else if (t == "saw") c.router.kind = RouterKind::SprayAndWait;
    else if (t == "epidemic") c.router.kind = RouterKind::Epidemic;
    else v.fail("prophet, saw or epidemic");
    d.router_set = true;
  } else if (key == "prophet.pinit") c.router.prophet.p_init = v.number();
  else if (key == "prophet.beta") c.router.prophet.beta = v.number();
  else if (key == "prophet.k") c.router.prophet.k = v.number();
  else if (key == "prophet.timeUnit") c.router.prophet.time_unit = v.number();
  else if (key == "prophet.pruneFloor") c.router.prophet.prune_floor = v.number();
  else if (key == "saw.copies") {
    const auto n = v.integer();
    if (n == 0 || n > 1'000'000) v.fail("a copy count in [1, 1000000]");
    c.router.saw.copies = static_cast<std::uint32_t>(n);
  } else if (key == "saw.mode") {
    const auto t = v.text();
    if (t == "source") c.router.saw.mode = SawMode::Source;
    else if (t == "binary") c.router.saw.mode = SawMode::Binary;
    else v.fail("source or binary");
  } else if (key == "messages.interval") {
    std::tie(c.messages.interval_min, c.messages.interval_max) = v.range();
  } else if (key == "messages.size") {
    std::tie(c.messages.size_min, c.messages.size_max) = v.byte_range();
  } else if (key == "messages.start") c.messages.start = v.number();
  else if (key == "messages.end") c.messages.end = v.number();
  else if (key == "reports.bufferInterval") c.sample_interval = v.number();
  else throw ConfigError("unknown key '" + std::string(key) + "'", line);
}

void finalize(Draft& d) {
  ScenarioConfig& c = d.config;
  auto line_of = [&](std::string_view key) {
    auto it = d.lines.find(key);
    return it == d.lines.end() ? std::size_t{0} : it->second;
  };

  if (!d.router_set) throw ConfigError("missing required key 'router'");
  if (!(c.tick > 0.0)) throw ConfigError("scenario.tick must be > 0", line_of("scenario.tick"));
  if (!(c.duration >= c.tick)) {
    throw ConfigError("scenario.duration must be at least one tick", line_of("scenario.duration"));
  }
  if (c.map_files.empty() && c.route_files.empty()) {
    throw ConfigError("missing required key 'map.files' or 'routes.files'");
  }
  if (c.seeds.empty()) throw ConfigError("scenario.seeds must not be empty", line_of("scenario.seeds"));
  if (!(c.snap >= 0.0)) throw ConfigError("map.snap must be >= 0", line_of("map.snap"));
  if (!(c.sample_interval > 0.0)) {
    throw ConfigError("reports.bufferInterval must be > 0", line_of("reports.bufferInterval"));
  }

  const auto& p = c.router.prophet;
  if (!(p.p_init > 0.0 && p.p_init <= 1.0)) throw ConfigError("prophet.pinit must be in (0,1]", line_of("prophet.pinit"));
  if (!(p.beta >= 0.0 && p.beta <= 1.0)) throw ConfigError("prophet.beta must be in [0,1]", line_of("prophet.beta"));
  if (!(p.k >= 0.0)) throw ConfigError("prophet.k must be >= 0", line_of("prophet.k"));
  if (!(p.time_unit > 0.0)) throw ConfigError("prophet.timeUnit must be > 0", line_of("prophet.timeUnit"));
  if (!(p.prune_floor >= 0.0 && p.prune_floor < 1.0)) {
    throw ConfigError("prophet.pruneFloor must be in [0,1)", line_of("prophet.pruneFloor"));
  }

  try {
    c.radio.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what(), std::max(line_of("radio.range"), line_of("radio.bandwidth")));
  }
  try {
    c.messages.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what(), std::max(line_of("messages.interval"), line_of("messages.size")));
  }

  if (d.groups.empty()) throw ConfigError("missing required key 'group1.count' (no node groups defined)");
  c.groups.clear();
  std::size_t expected = 1;
  std::size_t total_nodes = 0;
  for (auto& [index, g] : d.groups) {
    if (index != expected) {
      throw ConfigError("group" + std::to_string(index) + " defined without group" + std::to_string(expected), g.line);
    }
    ++expected;
    NodeGroup out;
    if (!g.count) throw ConfigError("missing required key 'group" + std::to_string(index) + ".count'", g.line);
    if (*g.count == 0) throw ConfigError("group" + std::to_string(index) + ".count must be >= 1", g.line);
    out.count = *g.count;
    out.node_class = g.node_class.value_or(NodeClass::Pedestrian);
    const SpeedProfile defaults =
        out.node_class == NodeClass::Pedestrian ? SpeedProfile::pedestrian() : SpeedProfile::vehicle();
    out.speed = defaults;
    if (g.speed) std::tie(out.speed.min_speed, out.speed.max_speed) = *g.speed;
    if (g.wait) std::tie(out.speed.wait_min, out.speed.wait_max) = *g.wait;
    try {
      out.speed.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError("group" + std::to_string(index) + ": " + e.what(), g.line);
    }
    out.buffer = g.buffer.value_or(out.buffer);
    out.reverse = g.reverse.value_or(false);
    if (out.node_class == NodeClass::Bus) {
      if (!g.route) throw ConfigError("missing required key 'group" + std::to_string(index) + ".route'", g.line);
      if (*g.route == 0 || *g.route > c.route_files.size()) {
        throw ConfigError("group" + std::to_string(index) + ".route must index routes.files (1-based)", g.line);
      }
      out.route = *g.route;
    } else {
      if (g.route) throw ConfigError("group" + std::to_string(index) + ".route is only valid for buses", g.line);
      if (c.map_files.empty()) {
        throw ConfigError("group" + std::to_string(index) + " needs map.files for map movement", g.line);
      }
    }
    total_nodes += out.count;
    c.groups.push_back(out);
  }
  if (total_nodes < 2) throw ConfigError("message generation needs at least 2 nodes");
}

Draft parse_draft(std::string_view text, const std::filesystem::path& base_dir, bool allow_overrides) {
  Draft d;
  d.config.base_dir = base_dir;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  for (auto line : split(text, '\n')) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("expected 'key = value'", line_no);
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("empty key", line_no);
    if (!allow_overrides && !seen.insert(std::string(key)).second) {
      throw ConfigError("duplicate key '" + std::string(key) + "'", line_no);
    }
    apply_key(d, key, value, line_no);
  }
  finalize(d);
  return d;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ',';
    out += items[i];
  }
  return out;
}

std::string quantity_text(std::uint64_t bytes) {
  return bytes == kUnlimitedCapacity ? "unlimited" : std::to_string(bytes);
}

}  // namespace

ScenarioConfig parse_scenario(std::string_view text, const std::filesystem::path& base_dir) {
  return parse_draft(text, base_dir, false).config;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const GeoError& e) {
    throw ConfigError(e.what());
  }
  return parse_scenario(text, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

std::string serialize_scenario(const ScenarioConfig& c) {
  std::string out;
  auto put = [&](std::string_view key, const std::string& value) {
    out += key;
    out += " = ";
    out += value;
    out += '\n';
  };
  put("scenario.name", c.name);
  put("scenario.duration", format_number(c.duration));
  put("scenario.tick", format_number(c.tick));
  std::vector<std::string> seeds;
  for (auto s : c.seeds) seeds.push_back(std::to_string(s));
  put("scenario.seeds", join(seeds));
  put("scenario.out", c.out);
  if (!c.map_files.empty()) put("map.files", join(c.map_files));
  put("map.snap", format_number(c.snap));
  if (!c.route_files.empty()) put("routes.files", join(c.route_files));
  put("radio.range", format_number(c.radio.range));
  put("radio.bandwidth", format_number(c.radio.bandwidth));
  put("router", std::string(router_name(c.router.kind)));
  put("prophet.pinit", format_number(c.router.prophet.p_init));
  put("prophet.beta", format_number(c.router.prophet.beta));
  put("prophet.k", format_number(c.router.prophet.k));
  put("prophet.timeUnit", format_number(c.router.prophet.time_unit));
  put("prophet.pruneFloor", format_number(c.router.prophet.prune_floor));
  put("saw.copies", std::to_string(c.router.saw.copies));
  put("saw.mode", c.router.saw.mode == SawMode::Source ? "source" : "binary");
  put("messages.interval", format_number(c.messages.interval_min) + "," + format_number(c.messages.interval_max));
  put("messages.size", std::to_string(c.messages.size_min) + "," + std::to_string(c.messages.size_max));
  put("messages.start", format_number(c.messages.start));
  if (c.messages.end) put("messages.end", format_number(*c.messages.end));
  put("reports.bufferInterval", format_number(c.sample_interval));
  for (std::size_t i = 0; i < c.groups.size(); ++i) {
    const auto& g = c.groups[i];
    const std::string prefix = "group" + std::to_string(i + 1) + ".";
    put(prefix + "count", std::to_string(g.count));
    put(prefix + "class", std::string(class_name(g.node_class)));
    put(prefix + "speed", format_number(g.speed.min_speed) + "," + format_number(g.speed.max_speed));
    put(prefix + "wait", format_number(g.speed.wait_min) + "," + format_number(g.speed.wait_max));
    put(prefix + "buffer", quantity_text(g.buffer));
    if (g.node_class == NodeClass::Bus) put(prefix + "route", std::to_string(g.route));
    put(prefix + "reverse", g.reverse ? "true" : "false");
  }
  return out;
}

bool is_scalar_key(std::string_view key) {
  if (std::find(std::begin(kScalarKeys), std::end(kScalarKeys), key) != std::end(kScalarKeys)) return true;
  return group_key(key).has_value();
}

void set_scenario_value(ScenarioConfig& config, std::string_view key, std::string_view value) {
  if (!is_scalar_key(key)) throw ConfigError("'" + std::string(key) + "' is not a scalar config key");
  if (auto g = group_key(key); g && g->first > config.groups.size()) {
    throw ConfigError("'" + std::string(key) + "' refers to an undefined group");
  }
  std::string text = serialize_scenario(config);
  text += std::string(key) + " = " + std::string(value) + "\n";
  config = parse_draft(text, config.base_dir, true).config;
}

std::string config_hash(const ScenarioConfig& config) {
  ScenarioConfig c = config;
  c.seeds = {0};
  c.out.clear();
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(serialize_scenario(c))));
  return buf;
}

// --- Running -------------------------------------------------------------------

World make_world(const ScenarioConfig& config, std::uint64_t seed) {
  std::shared_ptr<const MapGraph> graph;
  std::vector<std::shared_ptr<const Route>> routes;
  try {
    if (!config.map_files.empty()) {
      std::vector<Polyline> lines;
      for (const auto& f : config.map_files) {
        auto doc = parse_wkt_document(read_text_file(config.resolve(f)));
        lines.insert(lines.end(), doc.polylines.begin(), doc.polylines.end());
      }
      graph = std::make_shared<const MapGraph>(build_map_graph(lines, config.snap));
      if (graph->vertex_count() == 0) throw ConfigError("map.files contain no road geometry");
    }
    for (const auto& f : config.route_files) {
      auto doc = parse_wkt_document(read_text_file(config.resolve(f)));
      routes.push_back(std::make_shared<const Route>(
          assemble_route(doc.polylines, std::filesystem::path(f).stem().string(), config.snap)));
    }
  } catch (const GeoError& e) {
    throw ConfigError(e.what());
  }

  std::vector<NodeSetup> setups;
  for (const auto& g : config.groups) {
    if (g.node_class == NodeClass::Bus) {
      const Route& route = *routes.at(g.route - 1);
      for (const auto& cursor : place_nodes_on_route(route, g.count, g.reverse)) {
        setups.push_back({Mover(g.speed, RoutePlanner(route, cursor), route.stops[cursor.stop_index], cursor.stop_index),
                          g.buffer});
      }
    } else {
      for (std::size_t i = 0; i < g.count; ++i) {
        const auto id = static_cast<NodeId>(setups.size());
        Rng spawn = Rng::derive(seed, id, StreamPurpose::Spawn);
        const std::size_t v = spawn.uniform_index(graph->vertex_count());
        setups.push_back({Mover(g.speed, MapPlanner(*graph), graph->vertices()[v], v), g.buffer});
      }
    }
  }

  WorldConfig wc;
  wc.tick = config.tick;
  wc.radio = config.radio;
  wc.router = config.router;
  wc.messages = config.messages;
  if (!wc.messages->end) wc.messages->end = config.duration;
  wc.sample_interval = config.sample_interval;
  wc.seed = seed;

  World world(wc, std::move(setups));
  if (graph) world.retain(graph);
  for (auto& r : routes) world.retain(r);
  return world;
}

RunOutput run_scenario(const ScenarioConfig& config, std::uint64_t seed) {
  World world = make_world(config, seed);
  try {
    world.run_until(config.duration);
  } catch (const std::logic_error& e) {
    throw RunError(std::string("invariant violation at t=") + format_number(world.now()) + ": " + e.what() +
                   "\nlast events:\n" + world.log().tail(20));
  }
  RunOutput out;
  out.bundle = make_report_bundle(world.log(), config.duration, world.occupancy(), {config_hash(config), seed});
  out.log = world.log();
  return out;
}

}  // namespace dtnsim
