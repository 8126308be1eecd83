// Command-line front end: convert, run, sweep, presets.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dtnsim/geodata.hpp"
#include "dtnsim/scenario.hpp"
#include "dtnsim/sweep.hpp"
#include "dtnsim/text.hpp"

namespace fs = std::filesystem;
using namespace dtnsim;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRunFailure = 2;
constexpr int kPartialSweep = 3;

fs::path presets_dir() {
  if (const char* env = std::getenv("SIM_PRESETS_DIR")) return env;
  return fs::path(DTNSIM_DATA_DIR) / "presets";
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  for (auto part : split(text, ',')) {
    part = trim(part);
    if (!part.empty()) out.emplace_back(part);
  }
  return out;
}

struct ConvertArgs {
  std::string input;
  std::string out = ".";
  std::string tracks = "track";
  std::string geometry_column = "WKT";
  std::string class_column = "highway";
  std::vector<std::string> routes;  // NAME=seg1.wkt,seg2.wkt
  double snap = 0.0;
};

int convert(const ConvertArgs& args) {
  if (args.input.empty() && args.routes.empty()) {
    std::cerr << "convert: nothing to do (give --input and/or --route)\n";
    return kConfigError;
  }
  const fs::path out(args.out);
  if (!args.input.empty()) {
    const std::string text = read_text_file(args.input);
    if (fs::path(args.input).extension() == ".wkt") {
      const auto doc = parse_wkt_document(text);
      write_text_file(out / "roads.wkt", to_wkt_document(doc.polylines));
      std::cerr << args.input << ": " << doc.polylines.size() << " linestrings, " << doc.skipped_points
                << " points skipped\n";
    } else {
      const auto records = parse_path_csv(text, {args.geometry_column, args.class_column});
      const auto names = split_list(args.tracks);
      const auto parts = split_tracks(records, std::set<std::string>(names.begin(), names.end()));
      auto to_lines = [](const std::vector<PathRecord>& rs) {
        std::vector<Polyline> lines;
        for (const auto& r : rs) lines.push_back(parse_wkt_linestring(r.geometry));
        return lines;
      };
      write_text_file(out / "roads.wkt", to_wkt_document(to_lines(parts.roads)));
      write_text_file(out / "tracks.wkt", to_wkt_document(to_lines(parts.tracks)));
      std::cerr << args.input << ": " << records.size() << " records, " << parts.roads.size() << " roads, "
                << parts.tracks.size() << " tracks\n";
    }
  }
  for (const auto& spec : args.routes) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) {
      std::cerr << "convert: --route expects NAME=seg1.wkt,seg2.wkt, got '" << spec << "'\n";
      return kConfigError;
    }
    const std::string name = spec.substr(0, eq);
    std::vector<Polyline> segments;
    for (const auto& file : split_list(spec.substr(eq + 1))) {
      auto doc = parse_wkt_document(read_text_file(file));
      segments.insert(segments.end(), doc.polylines.begin(), doc.polylines.end());
    }
    const Route route = assemble_route(segments, name, args.snap);
    write_text_file(out / "routes" / (name + ".wkt"), to_wkt(Polyline{route.stops}) + "\n");
    std::cerr << "route " << name << ": " << segments.size() << " segments, " << route.stop_count() << " stops\n";
  }
  return kOk;
}

int run(const std::string& config_path, std::uint64_t seed, const std::string& out_arg, bool write_events) {
  const ScenarioConfig config = load_scenario(config_path);
  const fs::path out = out_arg.empty() ? fs::path(config.out) / ("seed" + std::to_string(seed)) : fs::path(out_arg);
  const RunOutput result = run_scenario(config, seed);
  write_report_bundle(out, result.bundle);
  if (write_events) write_text_file(out / "events.log", result.log.to_text());
  const auto& s = result.bundle.stats;
  std::cout << "created=" << s.created << " delivered=" << s.delivered
            << " delivery_prob=" << format_number(s.delivery_prob) << " -> " << out.string() << "\n";
  return kOk;
}

struct SweepArgs {
  std::string config;
  std::string axis;
  std::string values;
  std::string seeds;
  std::string preset;
  std::string out;
  std::size_t threads = 0;
};

int sweep(const SweepArgs& args) {
  SweepSpec spec;
  spec.base = load_scenario(args.config);
  if (!args.preset.empty()) {
    bool found = false;
    for (const auto& p : load_presets(presets_dir())) {
      if (p.name != args.preset) continue;
      spec.axis = p.axis;
      spec.values = p.values;
      found = true;
    }
    if (!found) throw ConfigError("unknown preset '" + args.preset + "' (see `sim presets list`)");
  }
  if (!args.axis.empty()) spec.axis = args.axis;
  if (!args.values.empty()) spec.values = split_list(args.values);
  if (spec.axis.empty() || spec.values.empty()) throw ConfigError("sweep needs --axis and --values, or --preset");
  if (!args.seeds.empty()) {
    spec.base.seeds.clear();
    for (const auto& s : split_list(args.seeds)) {
      const auto n = parse_uint(s);
      if (!n) throw ConfigError("--seeds: '" + s + "' is not a non-negative integer");
      spec.base.seeds.push_back(*n);
    }
    if (spec.base.seeds.empty()) throw ConfigError("--seeds is empty");
  }

  SweepOptions options;
  options.out = args.out.empty() ? fs::path(spec.base.out) : fs::path(args.out);
  options.threads = args.threads;
  const SweepResult result = run_sweep(spec, options);
  for (const auto& row : result.rows) {
    std::cout << spec.axis << "=" << row.value << " runs=" << row.runs << " failed=" << row.failed_runs
              << " delivery_prob=" << format_number(row.stats.delivery_prob) << "\n";
  }
  std::cout << "summary: " << (options.out / value_directory(spec.axis) / "sweep_summary.csv").string() << "\n";
  for (const auto& f : result.failures) {
    std::cerr << "run failed: " << spec.axis << "=" << f.value << " seed " << f.seed << ": " << f.message << "\n";
  }
  return result.any_failed() ? kPartialSweep : kOk;
}

int list_presets() {
  for (const auto& p : load_presets(presets_dir())) {
    std::cout << p.name << "\t" << p.axis << "\t";
    for (std::size_t i = 0; i < p.values.size(); ++i) std::cout << (i ? "," : "") << p.values[i];
    if (!p.description.empty()) std::cout << "\t" << p.description;
    std::cout << "\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Delay-tolerant network simulator"};
  app.require_subcommand(1);

  ConvertArgs conv;
  auto* convert_cmd = app.add_subcommand("convert", "Convert path CSV/WKT exports into road, track and route WKT");
  convert_cmd->add_option("--input,-i", conv.input, "CSV export or WKT file");
  convert_cmd->add_option("--out,-o", conv.out, "Output directory")->capture_default_str();
  convert_cmd->add_option("--tracks", conv.tracks, "Comma-separated classes treated as tracks")->capture_default_str();
  convert_cmd->add_option("--geometry-column", conv.geometry_column, "CSV geometry column")->capture_default_str();
  convert_cmd->add_option("--class-column", conv.class_column, "CSV path class column")->capture_default_str();
  convert_cmd->add_option("--route", conv.routes, "Assemble a route: NAME=seg1.wkt,seg2.wkt (repeatable)");
  convert_cmd->add_option("--snap", conv.snap, "Snap distance for joining route segments (m)")
      ->check(CLI::NonNegativeNumber);

  std::string run_config;
  std::uint64_t run_seed = 1;
  std::string run_out;
  bool run_events = false;
  auto* run_cmd = app.add_subcommand("run", "Run one scenario with one seed");
  run_cmd->add_option("--config,-c", run_config, "Scenario file")->required();
  run_cmd->add_option("--seed,-s", run_seed, "Master seed")->required();
  run_cmd->add_option("--out,-o", run_out, "Report directory (default <scenario.out>/seed<N>)");
  run_cmd->add_flag("--events", run_events, "Also write events.log");

  SweepArgs sw;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a parameter sweep over several seeds");
  sweep_cmd->add_option("--config,-c", sw.config, "Scenario file")->required();
  sweep_cmd->add_option("--axis", sw.axis, "Scalar config key to vary");
  sweep_cmd->add_option("--values", sw.values, "Comma-separated axis values");
  sweep_cmd->add_option("--seeds", sw.seeds, "Comma-separated seeds (default: scenario.seeds)");
  sweep_cmd->add_option("--preset", sw.preset, "Take axis and values from a preset");
  sweep_cmd->add_option("--out,-o", sw.out, "Output root (default scenario.out)");
  sweep_cmd->add_option("--threads", sw.threads, "Worker count (default SIM_THREADS or CPU count)");

  auto* presets_cmd = app.add_subcommand("presets", "Inspect sweep presets");
  presets_cmd->require_subcommand(1);
  auto* presets_list = presets_cmd->add_subcommand("list", "List available presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*convert_cmd) return convert(conv);
    if (*run_cmd) return run(run_config, run_seed, run_out, run_events);
    if (*sweep_cmd) return sweep(sw);
    if (*presets_list) return list_presets();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const GeoError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kConfigError;
  } catch (const RunError& e) {
    std::cerr << "run failed: " << e.what() << "\n";
    return kRunFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRunFailure;
  }
  return kOk;
}
