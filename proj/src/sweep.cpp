#include "dtnsim/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>

#include "dtnsim/geodata.hpp"
#include "dtnsim/text.hpp"

namespace dtnsim {

std::string SweepRow::status() const {
  if (failed_runs == 0) return "ok";
  return runs > 0 ? "partial" : "failed";
}

std::string value_directory(std::string_view value) {
  std::string out;
  for (char c : trim(value)) {
    const bool safe = std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '_';
    out += safe ? c : '_';
  }
  return out.empty() ? "_" : out;
}

std::size_t default_worker_count() {
  if (const char* env = std::getenv("SIM_THREADS")) {
    if (auto n = parse_uint(env); n && *n > 0) return static_cast<std::size_t>(*n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<ScenarioConfig> expand_sweep(const SweepSpec& spec) {
  if (!is_scalar_key(spec.axis)) throw ConfigError("sweep axis '" + spec.axis + "' is not a scalar config key");
  if (spec.values.empty()) throw ConfigError("sweep needs at least one axis value");
  std::vector<ScenarioConfig> configs;
  std::vector<std::string> dirs;
  for (const auto& v : spec.values) {
    ScenarioConfig c = spec.base;
    try {
      set_scenario_value(c, spec.axis, v);
    } catch (const ConfigError& e) {
      throw ConfigError("sweep value '" + v + "': " + e.what());
    }
    const auto dir = value_directory(v);
    if (std::find(dirs.begin(), dirs.end(), dir) != dirs.end()) {
      throw ConfigError("sweep value '" + v + "' is listed twice");
    }
    dirs.push_back(dir);
    configs.push_back(std::move(c));
  }
  return configs;
}

SweepResult run_sweep(const SweepSpec& spec, const SweepOptions& options) {
  const auto configs = expand_sweep(spec);
  const auto& seeds = spec.base.seeds;
  const std::filesystem::path root = options.out / value_directory(spec.axis);

  struct Job {
    std::size_t value;
    std::uint64_t seed;
    std::optional<ReportBundle> bundle;
    std::string error;
  };
  std::vector<Job> jobs;
  for (std::size_t v = 0; v < configs.size(); ++v) {
    for (auto seed : seeds) jobs.push_back({v, seed, std::nullopt, {}});
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      Job& job = jobs[i];
      try {
        auto out = run_scenario(configs[job.value], job.seed);
        write_report_bundle(root / value_directory(spec.values[job.value]) / ("seed" + std::to_string(job.seed)),
                            out.bundle);
        job.bundle = std::move(out.bundle);
      } catch (const std::exception& e) {
        job.error = e.what();
      }
    }
  };
  const std::size_t threads = std::min(options.threads ? options.threads : default_worker_count(), jobs.size());
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
  }

  SweepResult result;
  result.axis = spec.axis;
  for (std::size_t v = 0; v < configs.size(); ++v) {
    SweepRow row;
    row.value = spec.values[v];
    std::vector<ReportBundle> bundles;
    for (auto& job : jobs) {
      if (job.value != v) continue;
      if (job.bundle) {
        bundles.push_back(*job.bundle);
      } else {
        ++row.failed_runs;
        result.failures.push_back({row.value, job.seed, job.error});
      }
    }
    row.runs = bundles.size();
    if (!bundles.empty()) {
      auto agg = aggregate_seeds(bundles);
      write_aggregated_bundle(root / value_directory(row.value), agg);
      row.stats = agg.stats;
    } else {
      row.stats = MeanMessageStats{};
      for (double* f : {&row.stats.created, &row.stats.started, &row.stats.relayed, &row.stats.aborted,
                        &row.stats.dropped, &row.stats.delivered}) {
        *f = kUndefined;
      }
    }
    result.rows.push_back(std::move(row));
  }
  write_text_file(root / "sweep_summary.csv", sweep_summary_csv(result));
  return result;
}

std::string sweep_summary_csv(const SweepResult& result) {
  std::string out = "axis,value";
  for (const auto& c : stats_columns()) out += "," + c;
  out += ",runs,failed_runs,status\n";
  for (const auto& row : result.rows) {
    // Sizes and rates are written as plain numbers so the column sorts numerically.
    const auto q = parse_quantity(row.value);
    out += result.axis + "," + (q ? format_number(*q) : row.value);
    for (const auto& v : stats_values(row.stats)) out += "," + v;
    out += "," + std::to_string(row.runs) + "," + std::to_string(row.failed_runs) + "," + row.status() + "\n";
  }
  return out;
}

Preset parse_preset(std::string_view text, std::string name) {
  Preset p;
  p.name = std::move(name);
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
    if (key == "axis") {
      p.axis = std::string(value);
    } else if (key == "values") {
      p.values.clear();
      for (auto v : split(value, ',')) p.values.emplace_back(trim(v));
    } else if (key == "description") {
      p.description = std::string(value);
    } else {
      throw ConfigError("unknown preset key '" + std::string(key) + "'", line_no);
    }
  }
  if (p.axis.empty()) throw ConfigError("preset '" + p.name + "' has no axis");
  if (!is_scalar_key(p.axis)) throw ConfigError("preset '" + p.name + "': axis '" + p.axis + "' is not a scalar key");
  if (p.values.empty()) throw ConfigError("preset '" + p.name + "' has no values");
  return p;
}

std::vector<Preset> load_presets(const std::filesystem::path& dir) {
  std::vector<Preset> presets;
  if (!std::filesystem::is_directory(dir)) return presets;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".preset") continue;
    const auto name = entry.path().stem().string();
    try {
      presets.push_back(parse_preset(read_text_file(entry.path()), name));
    } catch (const ConfigError& e) {
      throw ConfigError(entry.path().filename().string() + ": " + e.what());
    }
  }
  std::sort(presets.begin(), presets.end(), [](const Preset& a, const Preset& b) { return a.name < b.name; });
  return presets;
}

}  // namespace dtnsim
