#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dtnsim/message.hpp"

namespace dtnsim {

enum class EventKind : std::uint8_t {
  Created,    // a = source, b = destination, size, value = source-destination distance (m)
  Started,    // a = sender, b = receiver
  Relayed,    // a = sender, b = receiver; transfer completed
  Aborted,    // a = sender, b = receiver; link went down mid-transfer
  Dropped,    // a = node that evicted (or could not store) the message
  Removed,    // a = node whose copy left the buffer after handing it to the destination
  Delivered,  // a = last sender, b = destination, hops = transfers on the path
  LinkUp,     // a < b
  LinkDown,   // a < b
};

std::string_view to_string(EventKind kind);

struct Event {
  double time = 0.0;
  EventKind kind = EventKind::Created;
  NodeId a = kNoNode;
  NodeId b = kNoNode;
  MessageId message = kNoMessage;
  std::uint64_t size = 0;
  std::uint32_t hops = 0;
  double value = 0.0;

  friend bool operator==(const Event&, const Event&) = default;
};

/// Append-only, time-ordered record of everything that happened in a run.
class EventLog {
 public:
  /// Throws std::logic_error if `e` is older than the last event.
  void append(const Event& e);

  std::span<const Event> events() const { return events_; }
  std::size_t size() const { return events_.size(); }
  std::size_t count(EventKind kind) const;

  /// One line per event: `time kind field=value ...`.
  void write_text(std::ostream& out) const;
  std::string to_text() const;

  /// The last `n` lines of to_text(), for diagnostics.
  std::string tail(std::size_t n) const;

  friend bool operator==(const EventLog&, const EventLog&) = default;

 private:
  std::vector<Event> events_;
};

std::string format_event(const Event& e);

}  // namespace dtnsim
