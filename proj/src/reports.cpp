#include "dtnsim/reports.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

#include "dtnsim/geodata.hpp"
#include "dtnsim/text.hpp"

namespace dtnsim {

double ContactHistogram::total() const {
  double sum = 0.0;
  for (const auto& [bin, count] : bins) sum += count;
  return sum;
}

namespace {

struct PairKey {
  std::uint64_t operator()(NodeId a, NodeId b) const { return (std::uint64_t(a) << 32) | b; }
};

double mean_or_undefined(double sum, std::size_t n) { return n ? sum / static_cast<double>(n) : kUndefined; }

}  // namespace

MessageStats finalize_message_stats(const EventLog& log, double horizon) {
  MessageStats s;
  std::unordered_map<MessageId, const Event*> created;
  std::unordered_map<std::uint64_t, double> open_episodes;  // (message, node) -> start
  auto episode_key = [](MessageId m, NodeId n) { return (std::uint64_t(m) << 32) | n; };

  double latency_sum = 0.0;
  double hop_sum = 0.0;
  double buffer_sum = 0.0;
  std::size_t episodes = 0;
  auto close_episode = [&](MessageId m, NodeId n, double t) {
    auto it = open_episodes.find(episode_key(m, n));
    if (it == open_episodes.end()) return;
    buffer_sum += t - it->second;
    ++episodes;
    open_episodes.erase(it);
  };

  for (const auto& e : log.events()) {
    if (e.time > horizon) break;
    switch (e.kind) {
      case EventKind::Created:
        ++s.created;
        created[e.message] = &e;
        open_episodes[episode_key(e.message, e.a)] = e.time;
        break;
      case EventKind::Started:
        ++s.started;
        break;
      case EventKind::Relayed: {
        ++s.relayed;
        auto it = created.find(e.message);
        const bool to_destination = it != created.end() && it->second->b == e.b;
        if (!to_destination) open_episodes[episode_key(e.message, e.b)] = e.time;
        break;
      }
      case EventKind::Aborted:
        ++s.aborted;
        break;
      case EventKind::Dropped:
        ++s.dropped;
        close_episode(e.message, e.a, e.time);
        break;
      case EventKind::Removed:
        close_episode(e.message, e.a, e.time);
        break;
      case EventKind::Delivered: {
        ++s.delivered;
        auto it = created.find(e.message);
        if (it != created.end()) latency_sum += e.time - it->second->time;
        hop_sum += e.hops;
        break;
      }
      case EventKind::LinkUp:
      case EventKind::LinkDown:
        break;
    }
  }

  if (s.created) s.delivery_prob = static_cast<double>(s.delivered) / static_cast<double>(s.created);
  if (s.delivered) {
    s.overhead_ratio = (static_cast<double>(s.relayed) - static_cast<double>(s.delivered)) /
                       static_cast<double>(s.delivered);
  }
  s.latency_avg = mean_or_undefined(latency_sum, s.delivered);
  s.hopcount_avg = mean_or_undefined(hop_sum, s.delivered);
  s.buffertime_avg = mean_or_undefined(buffer_sum, episodes);
  return s;
}

std::int64_t round_contact_duration(double seconds) {
  // Tick arithmetic can land a hair below an exact half second.
  return static_cast<std::int64_t>(std::floor(seconds + 0.5 + 1e-9));
}

ContactHistogram bin_contact_durations(const EventLog& log, double horizon) {
  ContactHistogram h;
  std::map<std::uint64_t, double> open;
  const PairKey key;
  for (const auto& e : log.events()) {
    if (e.time > horizon) break;
    if (e.kind == EventKind::LinkUp) {
      open[key(e.a, e.b)] = e.time;
    } else if (e.kind == EventKind::LinkDown) {
      auto it = open.find(key(e.a, e.b));
      if (it == open.end()) continue;
      h.bins[round_contact_duration(e.time - it->second)] += 1.0;
      open.erase(it);
    }
  }
  for (const auto& [pair, up] : open) h.bins[round_contact_duration(horizon - up)] += 1.0;
  return h;
}

OccupancyRow sample_buffer_occupancy(std::span<const double> occupancy, double t) {
  OccupancyRow row{t, 0.0, 0.0, 0.0};
  if (occupancy.empty()) return row;
  row.mean = std::accumulate(occupancy.begin(), occupancy.end(), 0.0) / static_cast<double>(occupancy.size());
  const auto [lo, hi] = std::minmax_element(occupancy.begin(), occupancy.end());
  row.min = *lo;
  row.max = *hi;
  return row;
}

std::vector<DistanceDelayRecord> record_distance_delay(const EventLog& log) {
  std::vector<DistanceDelayRecord> out;
  std::unordered_map<MessageId, std::pair<std::size_t, double>> created;  // index, creation time
  for (const auto& e : log.events()) {
    if (e.kind == EventKind::Created) {
      created[e.message] = {out.size(), e.time};
      out.push_back({e.message, e.value, kUndefined, 0, std::nullopt});
    } else if (e.kind == EventKind::Delivered) {
      auto it = created.find(e.message);
      if (it == created.end()) continue;
      auto& rec = out[it->second.first];
      if (!is_undefined(rec.delay)) continue;
      rec.delay = e.time - it->second.second;
      rec.hops = e.hops;
    }
  }
  return out;
}

ReportBundle make_report_bundle(const EventLog& log, double horizon, BufferOccupancyTimeline occupancy,
                                RunMetadata metadata) {
  ReportBundle b;
  b.stats = finalize_message_stats(log, horizon);
  b.contacts = bin_contact_durations(log, horizon);
  b.occupancy = std::move(occupancy);
  b.distance_delay = record_distance_delay(log);
  b.metadata = std::move(metadata);
  return b;
}

AggregatedBundle aggregate_seeds(std::span<const ReportBundle> bundles) {
  if (bundles.empty()) throw std::invalid_argument("cannot aggregate an empty bundle list");
  for (const auto& b : bundles) {
    if (b.metadata.config_hash != bundles.front().metadata.config_hash) {
      throw std::invalid_argument("config hash mismatch: " + b.metadata.config_hash + " vs " +
                                  bundles.front().metadata.config_hash);
    }
  }

  std::vector<const ReportBundle*> ordered;
  for (const auto& b : bundles) ordered.push_back(&b);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const auto* x, const auto* y) { return x->metadata.seed < y->metadata.seed; });

  AggregatedBundle agg;
  agg.config_hash = bundles.front().metadata.config_hash;
  const double n = static_cast<double>(ordered.size());
  auto& m = agg.stats;
  m.runs = ordered.size();

  auto mean_defined = [&](auto field) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto* b : ordered) {
      const double v = b->stats.*field;
      if (is_undefined(v)) {
        ++m.undefined_excluded;
      } else {
        sum += v;
        ++count;
      }
    }
    return mean_or_undefined(sum, count);
  };
  auto mean_count = [&](auto field) {
    double sum = 0.0;
    for (const auto* b : ordered) sum += static_cast<double>(b->stats.*field);
    return sum / n;
  };

  m.created = mean_count(&MessageStats::created);
  m.started = mean_count(&MessageStats::started);
  m.relayed = mean_count(&MessageStats::relayed);
  m.aborted = mean_count(&MessageStats::aborted);
  m.dropped = mean_count(&MessageStats::dropped);
  m.delivered = mean_count(&MessageStats::delivered);
  m.delivery_prob = mean_defined(&MessageStats::delivery_prob);
  m.overhead_ratio = mean_defined(&MessageStats::overhead_ratio);
  m.latency_avg = mean_defined(&MessageStats::latency_avg);
  m.hopcount_avg = mean_defined(&MessageStats::hopcount_avg);
  m.buffertime_avg = mean_defined(&MessageStats::buffertime_avg);

  for (const auto* b : ordered) {
    for (const auto& [bin, count] : b->contacts.bins) agg.contacts.bins[bin] += count;
  }
  for (auto& [bin, count] : agg.contacts.bins) count /= n;

  const std::size_t rows = ordered.front()->occupancy.size();
  for (const auto* b : ordered) {
    if (b->occupancy.size() != rows) throw std::invalid_argument("buffer occupancy timelines differ in length");
  }
  agg.occupancy.resize(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    OccupancyRow sum{ordered.front()->occupancy[r].time, 0.0, 0.0, 0.0};
    for (const auto* b : ordered) {
      sum.mean += b->occupancy[r].mean;
      sum.min += b->occupancy[r].min;
      sum.max += b->occupancy[r].max;
    }
    agg.occupancy[r] = {sum.time, sum.mean / n, sum.min / n, sum.max / n};
  }

  for (const auto* b : ordered) {
    agg.seeds.push_back(b->metadata.seed);
    for (auto rec : b->distance_delay) {
      rec.seed = b->metadata.seed;
      agg.distance_delay.push_back(rec);
    }
  }
  return agg;
}

// --- CSV -----------------------------------------------------------------------

const std::vector<std::string>& stats_columns() {
  static const std::vector<std::string> columns{
      "created",       "started",        "relayed",     "aborted",      "dropped",       "delivered",
      "delivery_prob", "overhead_ratio", "latency_avg", "hopcount_avg", "buffertime_avg"};
  return columns;
}

std::vector<std::string> stats_values(const MeanMessageStats& s) {
  return {format_number(s.created),       format_number(s.started),        format_number(s.relayed),
          format_number(s.aborted),       format_number(s.dropped),        format_number(s.delivered),
          format_number(s.delivery_prob), format_number(s.overhead_ratio), format_number(s.latency_avg),
          format_number(s.hopcount_avg),  format_number(s.buffertime_avg)};
}

namespace {

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += ',';
    out += parts[i];
  }
  return out;
}

}  // namespace

std::string message_stats_csv(const ReportBundle& bundle) {
  const auto& s = bundle.stats;
  std::vector<std::string> header{"config_hash", "seed"};
  header.insert(header.end(), stats_columns().begin(), stats_columns().end());
  const std::vector<std::string> row{bundle.metadata.config_hash,
                                     std::to_string(bundle.metadata.seed),
                                     format_number(s.created),
                                     format_number(s.started),
                                     format_number(s.relayed),
                                     format_number(s.aborted),
                                     format_number(s.dropped),
                                     format_number(s.delivered),
                                     format_number(s.delivery_prob),
                                     format_number(s.overhead_ratio),
                                     format_number(s.latency_avg),
                                     format_number(s.hopcount_avg),
                                     format_number(s.buffertime_avg)};
  return join(header) + '\n' + join(row) + '\n';
}

std::string mean_stats_csv(const AggregatedBundle& bundle) {
  std::vector<std::string> header{"config_hash", "seeds"};
  header.insert(header.end(), stats_columns().begin(), stats_columns().end());
  header.push_back("runs");
  header.push_back("undefined_excluded");

  std::string seeds;
  for (std::size_t i = 0; i < bundle.seeds.size(); ++i) {
    if (i) seeds += ';';
    seeds += std::to_string(bundle.seeds[i]);
  }
  std::vector<std::string> row{bundle.config_hash, seeds};
  const auto values = stats_values(bundle.stats);
  row.insert(row.end(), values.begin(), values.end());
  row.push_back(std::to_string(bundle.stats.runs));
  row.push_back(std::to_string(bundle.stats.undefined_excluded));
  return join(header) + '\n' + join(row) + '\n';
}

std::string contact_times_csv(const ContactHistogram& histogram) {
  std::string out = "duration_s,count\n";
  for (const auto& [bin, count] : histogram.bins) {
    out += std::to_string(bin) + ',' + format_number(count) + '\n';
  }
  return out;
}

std::string buffer_occupancy_csv(const BufferOccupancyTimeline& timeline) {
  std::string out = "time_s,mean,min,max\n";
  for (const auto& r : timeline) {
    out += format_number(r.time) + ',' + format_number(r.mean) + ',' + format_number(r.min) + ',' +
           format_number(r.max) + '\n';
  }
  return out;
}

std::string distance_delay_csv(std::span<const DistanceDelayRecord> records) {
  const bool tagged = !records.empty() && records.front().seed.has_value();
  std::string out = tagged ? "seed,message_id,distance_m,delay_s,hops\n" : "message_id,distance_m,delay_s,hops\n";
  for (const auto& r : records) {
    if (tagged) out += std::to_string(r.seed.value_or(0)) + ',';
    out += message_name(r.message) + ',' + format_number(r.creation_distance) + ',' + format_number(r.delay) + ',' +
           std::to_string(r.hops) + '\n';
  }
  return out;
}

void write_report_bundle(const std::filesystem::path& dir, const ReportBundle& bundle) {
  write_text_file(dir / "message_stats.csv", message_stats_csv(bundle));
  write_text_file(dir / "contact_times.csv", contact_times_csv(bundle.contacts));
  write_text_file(dir / "buffer_occupancy.csv", buffer_occupancy_csv(bundle.occupancy));
  write_text_file(dir / "distance_delay.csv", distance_delay_csv(bundle.distance_delay));
}

void write_aggregated_bundle(const std::filesystem::path& dir, const AggregatedBundle& bundle) {
  write_text_file(dir / "avg_message_stats.csv", mean_stats_csv(bundle));
  write_text_file(dir / "avg_contact_times.csv", contact_times_csv(bundle.contacts));
  write_text_file(dir / "avg_buffer_occupancy.csv", buffer_occupancy_csv(bundle.occupancy));
  write_text_file(dir / "avg_distance_delay.csv", distance_delay_csv(bundle.distance_delay));
}

}  // namespace dtnsim
