#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dtnsim/events.hpp"
#include "dtnsim/mobility.hpp"
#include "dtnsim/reports.hpp"
#include "dtnsim/routing.hpp"
#include "dtnsim/world.hpp"

namespace dtnsim {

/// Invalid scenario text or values. `line` is 1-based, 0 when not tied to a
/// line (e.g. a missing key).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// A failure while a valid scenario was running.
class RunError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class NodeClass { Pedestrian, Vehicle, Bus };

struct NodeGroup {
  std::size_t count = 1;
  NodeClass node_class = NodeClass::Pedestrian;
  SpeedProfile speed = SpeedProfile::pedestrian();
  std::uint64_t buffer = 5 * 1024 * 1024;
  std::size_t route = 0;  // 1-based index into route_files; buses only
  bool reverse = false;

  friend bool operator==(const NodeGroup&, const NodeGroup&) = default;
};

struct ScenarioConfig {
  std::string name = "scenario";
  double duration = 43200.0;
  double tick = 0.1;
  std::vector<std::string> map_files;    // as written in the config
  std::vector<std::string> route_files;  // as written in the config
  double snap = 0.0;
  std::vector<NodeGroup> groups;
  RadioConfig radio{10.0, 250.0 * 1024};
  RouterConfig router;
  GeneratorConfig messages;
  double sample_interval = 30.0;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::string out = "out";
  std::filesystem::path base_dir = ".";  // relative file names resolve here

  std::filesystem::path resolve(const std::string& file) const;
  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

/// Parses flat `section.key = value` text with `#` comments. Defaults are
/// applied and the result is validated; unknown keys are errors.
///
/// Sizes and rates accept binary suffixes: `512k` = 512 * 1024, `1M`, `1G`.
/// Ranges are written `lo,hi` or `lo:hi`. Buffers may be `unlimited`.
ScenarioConfig parse_scenario(std::string_view text, const std::filesystem::path& base_dir = ".");
ScenarioConfig load_scenario(const std::filesystem::path& path);

/// Canonical text form; parse_scenario(serialize_scenario(c)) == c.
std::string serialize_scenario(const ScenarioConfig& config);

/// Overrides one scalar key (as a sweep axis would) and revalidates.
void set_scenario_value(ScenarioConfig& config, std::string_view key, std::string_view value);

/// True if `key` names a single field usable as a sweep axis. Range fields
/// count as one field; sweep values for them are written `lo:hi`.
bool is_scalar_key(std::string_view key);

/// Fingerprint of everything except seeds and output directory.
std::string config_hash(const ScenarioConfig& config);

/// Parses `512k`, `1M`, `250000`, ... (binary multiples).
std::optional<double> parse_quantity(std::string_view text);

struct RunOutput {
  ReportBundle bundle;
  EventLog log;
};

/// Builds the world for (config, seed): loads maps and routes, places nodes.
World make_world(const ScenarioConfig& config, std::uint64_t seed);

/// Runs to `config.duration`. Deterministic in (config, seed). Invariant
/// violations become RunError carrying the tail of the event log.
RunOutput run_scenario(const ScenarioConfig& config, std::uint64_t seed);

}  // namespace dtnsim
