#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dtnsim/reports.hpp"
#include "dtnsim/scenario.hpp"

namespace dtnsim {

struct SweepSpec {
  std::string axis;                 // a scalar config key, e.g. "saw.copies"
  std::vector<std::string> values;  // config-syntax values, in sweep order
  ScenarioConfig base;
};

struct SweepOptions {
  std::filesystem::path out = "out";
  std::size_t threads = 0;  // 0: SIM_THREADS, else hardware concurrency
};

struct SweepFailure {
  std::string value;
  std::uint64_t seed = 0;
  std::string message;
};

struct SweepRow {
  std::string value;
  MeanMessageStats stats;  // means over the runs that succeeded
  std::size_t runs = 0;
  std::size_t failed_runs = 0;

  std::string status() const;  // "ok", "partial" or "failed"
};

struct SweepResult {
  std::string axis;
  std::vector<SweepRow> rows;
  std::vector<SweepFailure> failures;  // ordered by (value, seed)

  bool any_failed() const { return !failures.empty(); }
};

/// Applies every axis value to the base config up front, so a bad value is a
/// ConfigError before any run starts.
std::vector<ScenarioConfig> expand_sweep(const SweepSpec& spec);

/// Runs every value x seed on a bounded worker pool, writes per-run reports
/// to out/<axis>/<value>/seed<N>/, seed means to out/<axis>/<value>/avg_*.csv
/// and the table to out/<axis>/sweep_summary.csv. Failed runs do not stop
/// the sweep.
SweepResult run_sweep(const SweepSpec& spec, const SweepOptions& options = {});

std::string sweep_summary_csv(const SweepResult& result);

/// Directory name used for an axis value.
std::string value_directory(std::string_view value);

/// Pool size: SIM_THREADS if set to a positive integer, else hardware
/// concurrency (at least 1).
std::size_t default_worker_count();

struct Preset {
  std::string name;  // file stem
  std::string axis;
  std::vector<std::string> values;
  std::string description;
};

/// Reads `*.preset` files (keys: axis, values, description) sorted by name.
std::vector<Preset> load_presets(const std::filesystem::path& dir);
Preset parse_preset(std::string_view text, std::string name);

}  // namespace dtnsim
