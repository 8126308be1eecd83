#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dtnsim/events.hpp"
#include "dtnsim/message.hpp"

namespace dtnsim {

inline constexpr double kUndefined = std::numeric_limits<double>::quiet_NaN();

inline bool is_undefined(double v) { return std::isnan(v); }

/// Per-run message counters and derived ratios. Ratios with a zero
/// denominator are kUndefined, never 0.
struct MessageStats {
  std::uint64_t created = 0;
  std::uint64_t started = 0;
  std::uint64_t relayed = 0;
  std::uint64_t aborted = 0;
  std::uint64_t dropped = 0;
  std::uint64_t delivered = 0;
  double delivery_prob = kUndefined;
  double overhead_ratio = kUndefined;
  double latency_avg = kUndefined;
  double hopcount_avg = kUndefined;
  double buffertime_avg = kUndefined;
};

/// Seed-averaged MessageStats. `undefined_excluded` counts the per-seed
/// undefined values left out of the means.
struct MeanMessageStats {
  double created = 0;
  double started = 0;
  double relayed = 0;
  double aborted = 0;
  double dropped = 0;
  double delivered = 0;
  double delivery_prob = kUndefined;
  double overhead_ratio = kUndefined;
  double latency_avg = kUndefined;
  double hopcount_avg = kUndefined;
  double buffertime_avg = kUndefined;
  std::size_t runs = 0;
  std::size_t undefined_excluded = 0;
};

/// Contact counts keyed by duration rounded to the nearest second.
/// Counts are doubles so seed means stay exact.
struct ContactHistogram {
  std::map<std::int64_t, double> bins;

  double total() const;
  friend bool operator==(const ContactHistogram&, const ContactHistogram&) = default;
};

struct OccupancyRow {
  double time = 0.0;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;

  friend bool operator==(const OccupancyRow&, const OccupancyRow&) = default;
};

using BufferOccupancyTimeline = std::vector<OccupancyRow>;

struct DistanceDelayRecord {
  MessageId message = kNoMessage;
  double creation_distance = 0.0;
  double delay = kUndefined;  // kUndefined while undelivered
  std::uint32_t hops = 0;
  std::optional<std::uint64_t> seed;  // set once aggregated
};

struct RunMetadata {
  std::string config_hash;
  std::uint64_t seed = 0;
};

struct ReportBundle {
  MessageStats stats;
  ContactHistogram contacts;
  BufferOccupancyTimeline occupancy;
  std::vector<DistanceDelayRecord> distance_delay;
  RunMetadata metadata;
};

struct AggregatedBundle {
  MeanMessageStats stats;
  ContactHistogram contacts;
  BufferOccupancyTimeline occupancy;
  std::vector<DistanceDelayRecord> distance_delay;
  std::string config_hash;
  std::vector<std::uint64_t> seeds;
};

MessageStats finalize_message_stats(const EventLog& log, double horizon);

/// Round-half-up to the nearest second.
std::int64_t round_contact_duration(double seconds);

/// Pairs link-up/link-down events per node pair; contacts still open at
/// `horizon` are closed there.
ContactHistogram bin_contact_durations(const EventLog& log, double horizon);

/// Mean/min/max occupancy over the given fractions; all zero when empty.
OccupancyRow sample_buffer_occupancy(std::span<const double> occupancy, double t);

/// One record per created message, in creation order.
std::vector<DistanceDelayRecord> record_distance_delay(const EventLog& log);

/// Builds the full per-run bundle from a finished log.
ReportBundle make_report_bundle(const EventLog& log, double horizon, BufferOccupancyTimeline occupancy,
                                RunMetadata metadata);

/// Arithmetic means across seeds; inputs are ordered by seed first so the
/// result does not depend on argument order. Throws std::invalid_argument on
/// an empty list or mismatched config hashes.
AggregatedBundle aggregate_seeds(std::span<const ReportBundle> bundles);

// --- CSV output ----------------------------------------------------------------

std::string message_stats_csv(const ReportBundle& bundle);
std::string contact_times_csv(const ContactHistogram& histogram);
std::string buffer_occupancy_csv(const BufferOccupancyTimeline& timeline);
std::string distance_delay_csv(std::span<const DistanceDelayRecord> records);
std::string mean_stats_csv(const AggregatedBundle& bundle);

/// Column names shared by message_stats.csv rows and sweep summaries.
const std::vector<std::string>& stats_columns();
std::vector<std::string> stats_values(const MeanMessageStats& stats);

/// Writes message_stats.csv, contact_times.csv, buffer_occupancy.csv and
/// distance_delay.csv into `dir`.
void write_report_bundle(const std::filesystem::path& dir, const ReportBundle& bundle);

/// Same files prefixed with `avg_`.
void write_aggregated_bundle(const std::filesystem::path& dir, const AggregatedBundle& bundle);

}  // namespace dtnsim
