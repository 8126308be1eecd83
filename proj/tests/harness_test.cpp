#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "dtnsim/geodata.hpp"
#include "dtnsim/scenario.hpp"
#include "dtnsim/sweep.hpp"
#include "dtnsim/text.hpp"

using namespace dtnsim;
namespace fs = std::filesystem;

namespace {

const fs::path kData = DTNSIM_DATA_DIR;

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "dtnsim_harness" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream(path, std::ios::binary) << text;
}

std::string small_scenario(const std::string& router = "saw") {
  return "scenario.name = small\n"
         "scenario.duration = 900\n"
         "scenario.seeds = 1,2\n"
         "map.files = " + (kData / "maps" / "grid_2km.wkt").string() + "\n"
         "radio.range = 30\n"
         "router = " + router + "\n"
         "messages.interval = 10,20\n"
         "group1.count = 14\n"
         "group2.count = 4\n"
         "group2.class = vehicle\n";
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string("\"") + SIM_EXECUTABLE + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) { return read_text_file(p); }

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("scenario defaults and units") {
  const auto c = parse_scenario(small_scenario(), ".");
  CHECK(c.name == "small");
  CHECK(c.duration == 900.0);
  CHECK(c.tick == 0.1);
  CHECK(c.radio.range == 30.0);
  CHECK(c.radio.bandwidth == 256000.0);
  CHECK(c.router.kind == RouterKind::SprayAndWait);
  CHECK(c.router.saw.copies == 6);
  CHECK(c.router.saw.mode == SawMode::Source);
  CHECK(c.messages.interval_min == 10.0);
  CHECK(c.messages.size_min == 512 * 1024);
  CHECK(c.messages.size_max == 1024 * 1024);
  CHECK(c.seeds == std::vector<std::uint64_t>{1, 2});
  REQUIRE(c.groups.size() == 2);
  CHECK(c.groups[0].count == 14);
  CHECK(c.groups[0].speed == SpeedProfile::pedestrian());
  CHECK(c.groups[1].speed == SpeedProfile::vehicle());
  CHECK(c.groups[0].buffer == 5 * 1024 * 1024);

  CHECK(parse_quantity("512k") == 524288.0);
  CHECK(parse_quantity("1M") == 1048576.0);
  CHECK(parse_quantity("1MB") == 1048576.0);
  CHECK(parse_quantity("2G") == 2147483648.0);
  CHECK(parse_quantity("250000") == 250000.0);
  CHECK_FALSE(parse_quantity("fast").has_value());

  const auto c2 = parse_scenario(small_scenario() + "saw.copies = 12\nsaw.mode = binary\ngroup1.buffer = unlimited\n"
                                 "group1.speed = 1:2\nradio.bandwidth = 500k\n", ".");
  CHECK(c2.router.saw.copies == 12);
  CHECK(c2.router.saw.mode == SawMode::Binary);
  CHECK(c2.groups[0].buffer == kUnlimitedCapacity);
  CHECK(c2.groups[0].speed.min_speed == 1.0);
  CHECK(c2.groups[0].speed.max_speed == 2.0);
  CHECK(c2.radio.bandwidth == 512000.0);
}

TEST_CASE("scenario errors name the offending line") {
  auto line_of_error = [](const std::string& text) -> std::size_t {
    try {
      parse_scenario(text, ".");
    } catch (const ConfigError& e) {
      return e.line();
    }
    return 0;
  };
  // small_scenario() is 10 lines long.
  CHECK(line_of_error(small_scenario() + "radio.rnage = 10\n") == 11);
  CHECK(line_of_error(small_scenario() + "radio.range = 10\n") == 11);  // duplicate key
  CHECK(line_of_error(small_scenario() + "saw.copies = many\n") == 11);
  CHECK(line_of_error(small_scenario() + "no equals sign\n") == 11);
  CHECK(line_of_error(small_scenario() + "\n# comment\nscenario.tick = 0\n") == 13);
  CHECK(line_of_error(small_scenario() + "scenario.tick = 1000\n") == 2);  // duration below one tick
  CHECK(line_of_error(small_scenario() + "group4.count = 1\n") == 11);
  CHECK(line_of_error(small_scenario() + "group1.route = 1\n") != 0);
  CHECK(line_of_error(small_scenario() + "prophet.pruneFloor = 1\n") == 11);

  CHECK_THROWS_AS(parse_scenario("scenario.duration = 10\n", "."), ConfigError);  // no router, no nodes
  CHECK_THROWS_WITH_AS(load_scenario("/nonexistent/x.conf"), doctest::Contains("x.conf"), std::exception);
  CHECK_THROWS_AS(parse_scenario(small_scenario() + "routes.files = missing.wkt\n", "."), ConfigError);
  CHECK_THROWS_AS(parse_scenario(small_scenario() + "group3.count = 1\ngroup3.class = bus\n", "."), ConfigError);
}

TEST_CASE("serialization round-trips") {
  for (const char* name : {"grid.conf", "grid_12h.conf", "routes.conf"}) {
    const auto c = load_scenario(kData / "scenarios" / name);
    CAPTURE(name);
    CHECK(parse_scenario(serialize_scenario(c), c.base_dir) == c);
  }
  auto c = parse_scenario(small_scenario(), ".");
  for (const auto& [key, value] : std::vector<std::pair<std::string, std::string>>{
           {"radio.range", "12.5"}, {"group1.buffer", "3M"}, {"messages.interval", "1:2"},
           {"prophet.k", "0.1"}, {"router", "epidemic"}, {"group2.wait", "0,5"}}) {
    set_scenario_value(c, key, value);
    CHECK(parse_scenario(serialize_scenario(c), c.base_dir) == c);
  }
  CHECK(c.radio.range == 12.5);
  CHECK(c.groups[0].buffer == 3 * 1024 * 1024);
  CHECK(c.messages.interval_max == 2.0);
  CHECK(c.router.kind == RouterKind::Epidemic);
  CHECK(c.groups[1].speed.wait_max == 5.0);
}

TEST_CASE("scalar overrides") {
  auto c = parse_scenario(small_scenario(), ".");
  CHECK(is_scalar_key("saw.copies"));
  CHECK(is_scalar_key("group2.count"));
  CHECK(is_scalar_key("messages.interval"));
  CHECK_FALSE(is_scalar_key("scenario.seeds"));
  CHECK_FALSE(is_scalar_key("map.files"));
  CHECK_FALSE(is_scalar_key("saw.copys"));
  CHECK_THROWS_AS(set_scenario_value(c, "map.files", "x.wkt"), ConfigError);
  CHECK_THROWS_AS(set_scenario_value(c, "group5.count", "3"), ConfigError);
  CHECK_THROWS_AS(set_scenario_value(c, "scenario.duration", "0.01"), ConfigError);
  CHECK_THROWS_AS(set_scenario_value(c, "saw.copies", "0"), ConfigError);
  const auto before = c;
  set_scenario_value(c, "group1.count", "20");
  CHECK(c.groups[0].count == 20);
  c.groups[0].count = 14;
  CHECK(c == before);
}

TEST_CASE("config hash ignores seeds and output") {
  auto a = parse_scenario(small_scenario(), ".");
  auto b = a;
  b.seeds = {7, 8, 9};
  b.out = "elsewhere";
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16);
  set_scenario_value(b, "radio.range", "31");
  CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("worlds are built from the scenario") {
  const auto c = parse_scenario(small_scenario(), ".");
  World w = make_world(c, 3);
  REQUIRE(w.nodes().size() == 18);
  const auto map = parse_wkt_document(slurp(kData / "maps" / "grid_2km.wkt"));
  const auto graph = build_map_graph(map.polylines);
  std::set<std::pair<double, double>> vertices;
  for (const auto& v : graph.vertices()) vertices.insert({v.x, v.y});
  for (const auto& n : w.nodes()) CHECK(vertices.count({n.mover.position().x, n.mover.position().y}) == 1);
  CHECK(w.nodes()[17].mover.profile() == SpeedProfile::vehicle());

  World same = make_world(c, 3), other = make_world(c, 4);
  CHECK(same.positions() == w.positions());
  CHECK(other.positions() != w.positions());

  const auto routes = load_scenario(kData / "scenarios" / "routes.conf");
  World bus_world = make_world(routes, 1);
  std::size_t buses = 0;
  for (const auto& n : bus_world.nodes()) buses += std::holds_alternative<RoutePlanner>(n.mover.planner());
  CHECK(buses == 16);
}

TEST_CASE("runs are deterministic per seed") {
  const auto c = parse_scenario(small_scenario("prophet"), ".");
  const auto a = run_scenario(c, 5), b = run_scenario(c, 5), d = run_scenario(c, 6);
  CHECK(a.log == b.log);
  CHECK(message_stats_csv(a.bundle) == message_stats_csv(b.bundle));
  CHECK_FALSE(a.log == d.log);
  CHECK(a.bundle.metadata.config_hash == config_hash(c));
  CHECK(a.bundle.stats.created > 40);
  CHECK(a.bundle.occupancy.size() == 30);
}

TEST_CASE("sweep expansion") {
  SweepSpec spec{"saw.copies", {"2", "4"}, parse_scenario(small_scenario(), ".")};
  const auto configs = expand_sweep(spec);
  REQUIRE(configs.size() == 2);
  CHECK(configs[1].router.saw.copies == 4);

  spec.values = {"2", " 2"};
  CHECK_THROWS_AS(expand_sweep(spec), ConfigError);
  spec.values = {};
  CHECK_THROWS_AS(expand_sweep(spec), ConfigError);
  spec.values = {"0"};
  CHECK_THROWS_AS(expand_sweep(spec), ConfigError);
  spec.axis = "scenario.seeds";
  spec.values = {"1"};
  CHECK_THROWS_AS(expand_sweep(spec), ConfigError);

  CHECK(value_directory("0.5:1.5") == "0.5_1.5");
  CHECK(value_directory(" 512k ") == "512k");
  CHECK(value_directory("a/b") == "a_b");
  CHECK(value_directory("") == "_");
}

TEST_CASE("sweep outputs and summary") {
  const auto out = scratch("sweep");
  SweepSpec spec{"saw.copies", {"1", "6"}, parse_scenario(small_scenario(), ".")};
  const auto result = run_sweep(spec, {out, 1});
  CHECK_FALSE(result.any_failed());
  REQUIRE(result.rows.size() == 2);

  const auto summary = lines(slurp(out / "saw.copies" / "sweep_summary.csv"));
  REQUIRE(summary.size() == 3);
  std::string header = "axis,value";
  for (const auto& c : stats_columns()) header += "," + c;
  CHECK(summary[0] == header + ",runs,failed_runs,status");
  CHECK(summary[1].rfind("saw.copies,1,", 0) == 0);
  CHECK(summary[2].rfind("saw.copies,6,", 0) == 0);
  CHECK(summary[2].substr(summary[2].size() - 7) == ",2,0,ok");

  // Each row equals the seed mean of independent runs.
  for (std::size_t v = 0; v < 2; ++v) {
    auto c = spec.base;
    set_scenario_value(c, "saw.copies", spec.values[v]);
    std::vector<ReportBundle> bundles;
    for (auto seed : c.seeds) bundles.push_back(run_scenario(c, seed).bundle);
    const auto agg = aggregate_seeds(bundles);
    CHECK(stats_values(result.rows[v].stats) == stats_values(agg.stats));
    CHECK(slurp(out / "saw.copies" / spec.values[v] / "avg_message_stats.csv") == mean_stats_csv(agg));
    CHECK(slurp(out / "saw.copies" / spec.values[v] / "seed2" / "message_stats.csv") ==
          message_stats_csv(bundles[1]));
  }

  // The worker count never changes the outputs.
  const auto out3 = scratch("sweep3");
  run_sweep(spec, {out3, 3});
  for (const auto& entry : fs::recursive_directory_iterator(out)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), out);
    CAPTURE(rel.string());
    CHECK(slurp(entry.path()) == slurp(out3 / rel));
  }
}

TEST_CASE("failed runs are reported, not fatal") {
  const auto dir = scratch("failing");
  // Two route segments 3 m apart: they only join when map.snap covers the gap.
  write(dir / "gap.wkt", "LINESTRING (0 0, 200 0)\nLINESTRING (203 0, 400 0)\n");
  const std::string text = small_scenario() + "routes.files = gap.wkt\ngroup3.count = 2\ngroup3.class = bus\n"
                                              "group3.route = 1\n";
  write(dir / "s.conf", text);
  SweepSpec spec{"map.snap", {"0", "5"}, load_scenario(dir / "s.conf")};
  const auto result = run_sweep(spec, {dir / "out", 2});
  CHECK(result.any_failed());
  REQUIRE(result.failures.size() == 2);
  CHECK(result.failures[0].value == "0");
  CHECK(result.failures[0].message.find("not contiguous") != std::string::npos);
  CHECK(result.rows[0].status() == "failed");
  CHECK(result.rows[1].status() == "ok");
  CHECK(std::isnan(result.rows[0].stats.created));
  const auto summary = lines(slurp(dir / "out" / "map.snap" / "sweep_summary.csv"));
  REQUIRE(summary.size() == 3);
  CHECK(summary[1].rfind("map.snap,0,NaN,", 0) == 0);
  CHECK(summary[1].substr(summary[1].size() - 11) == ",0,2,failed");

  SweepRow partial;
  partial.runs = 2;
  partial.failed_runs = 1;
  CHECK(partial.status() == "partial");
}

TEST_CASE("shipped presets expand against the shipped scenarios") {
  const auto presets = load_presets(kData / "presets");
  std::set<std::string> names;
  for (const auto& p : presets) names.insert(p.name);
  for (const char* expected : {"buffer", "range", "bandwidth", "nodes", "saw_copies", "saw_mode", "prophet_timeunit",
                               "speed", "message_interval"}) {
    CHECK(names.count(expected) == 1);
  }
  const auto base = load_scenario(kData / "scenarios" / "grid.conf");
  for (const auto& p : presets) {
    CAPTURE(p.name);
    CHECK(expand_sweep({p.axis, p.values, base}).size() == p.values.size());
  }
  CHECK_THROWS_AS(parse_preset("axis = scenario.seeds\nvalues = 1\n", "x"), ConfigError);
  CHECK_THROWS_AS(parse_preset("values = 1\n", "x"), ConfigError);
  CHECK_THROWS_AS(parse_preset("axis = saw.copies\ncolour = red\n", "x"), ConfigError);
  const auto p = parse_preset("# c\naxis = saw.copies\nvalues = 1, 2 ,3\n", "x");
  CHECK(p.values == std::vector<std::string>{"1", "2", "3"});
}

TEST_CASE("worker count follows SIM_THREADS") {
  setenv("SIM_THREADS", "3", 1);
  CHECK(default_worker_count() == 3);
  setenv("SIM_THREADS", "zero", 1);
  CHECK(default_worker_count() >= 1);
  unsetenv("SIM_THREADS");
  CHECK(default_worker_count() >= 1);
}

TEST_CASE("command line") {
  const auto dir = scratch("cli");
  write(dir / "s.conf", small_scenario());
  const auto conf = (dir / "s.conf").string();

  SUBCASE("identical runs give identical bytes") {
    CHECK(run_cli("run --config " + conf + " --seed 4 --events --out " + (dir / "a").string(), dir / "a.log") == 0);
    CHECK(run_cli("run --config " + conf + " --seed 4 --events --out " + (dir / "b").string(), dir / "b.log") == 0);
    for (const char* f : {"message_stats.csv", "contact_times.csv", "buffer_occupancy.csv", "distance_delay.csv",
                          "events.log"}) {
      CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
    }
    CHECK(slurp(dir / "a.log").find("created=") != std::string::npos);
  }
  SUBCASE("exit codes") {
    write(dir / "bad.conf", small_scenario() + "radio.rnage = 3\n");
    CHECK(run_cli("run --config " + (dir / "bad.conf").string() + " --seed 1", dir / "bad.log") == 1);
    CHECK(slurp(dir / "bad.log").find("line 11") != std::string::npos);
    CHECK(run_cli("run --config " + (dir / "missing.conf").string() + " --seed 1", dir / "missing.log") == 1);
    CHECK(run_cli("run --seed 1", dir / "noconf.log") == 1);
    CHECK(run_cli("frobnicate", dir / "unknown.log") == 1);
    CHECK(run_cli("sweep --config " + conf + " --axis map.files --values x", dir / "axis.log") == 1);
    CHECK(run_cli("sweep --config " + conf + " --preset nope", dir / "preset.log") == 1);
  }
  SUBCASE("sweep") {
    const auto out = (dir / "sw").string();
    CHECK(run_cli("sweep --config " + conf + " --axis radio.range --values 10,30 --seeds 1 --out " + out,
                  dir / "sweep.log") == 0);
    const auto summary = lines(slurp(dir / "sw" / "radio.range" / "sweep_summary.csv"));
    REQUIRE(summary.size() == 3);
    CHECK(summary[1].rfind("radio.range,10,", 0) == 0);
    CHECK(fs::exists(dir / "sw" / "radio.range" / "30" / "seed1" / "message_stats.csv"));
    CHECK_FALSE(fs::exists(dir / "sw" / "radio.range" / "30" / "seed2"));
  }
  SUBCASE("partial sweep failure") {
    write(dir / "gap.wkt", "LINESTRING (0 0, 200 0)\nLINESTRING (203 0, 400 0)\n");
    write(dir / "f.conf", small_scenario() + "routes.files = gap.wkt\ngroup3.count = 2\ngroup3.class = bus\n"
                                             "group3.route = 1\n");
    CHECK(run_cli("sweep --config " + (dir / "f.conf").string() + " --axis map.snap --values 0,5 --seeds 1 --out " +
                      (dir / "fs").string(),
                  dir / "fail.log") == 3);
    CHECK(fs::exists(dir / "fs" / "map.snap" / "sweep_summary.csv"));
  }
  SUBCASE("presets list") {
    CHECK(run_cli("presets list", dir / "presets.log") == 0);
    const auto text = slurp(dir / "presets.log");
    CHECK(text.find("saw_copies\tsaw.copies\t2,4,8,16,32") != std::string::npos);
  }
  SUBCASE("convert") {
    CHECK(run_cli("convert --input " + (kData / "maps" / "sample_paths.csv").string() + " --out " +
                      (dir / "conv").string(),
                  dir / "convert.log") == 0);
    const auto roads = parse_wkt_document(slurp(dir / "conv" / "roads.wkt"));
    const auto tracks = parse_wkt_document(slurp(dir / "conv" / "tracks.wkt"));
    CHECK(roads.polylines.size() == 4);
    CHECK(tracks.polylines.size() == 2);
    CHECK(run_cli("convert", dir / "nothing.log") == 1);
  }
}
