#include "dtnsim/events.hpp"

#include <algorithm>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "dtnsim/text.hpp"

namespace dtnsim {

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::Created: return "created";
    case EventKind::Started: return "started";
    case EventKind::Relayed: return "relayed";
    case EventKind::Aborted: return "aborted";
    case EventKind::Dropped: return "dropped";
    case EventKind::Removed: return "removed";
    case EventKind::Delivered: return "delivered";
    case EventKind::LinkUp: return "link_up";
    case EventKind::LinkDown: return "link_down";
  }
  return "unknown";
}

void EventLog::append(const Event& e) {
  if (!events_.empty() && e.time < events_.back().time) {
    throw std::logic_error("event log time went backwards: " + format_event(e));
  }
  events_.push_back(e);
}

std::size_t EventLog::count(EventKind kind) const {
  return static_cast<std::size_t>(
      std::count_if(events_.begin(), events_.end(), [&](const Event& e) { return e.kind == kind; }));
}

std::string format_event(const Event& e) {
  std::string line = format_number(e.time);
  line += ' ';
  line += to_string(e.kind);
  if (e.message != kNoMessage) line += " msg=" + message_name(e.message);
  if (e.a != kNoNode) line += " a=" + std::to_string(e.a);
  if (e.b != kNoNode) line += " b=" + std::to_string(e.b);
  switch (e.kind) {
    case EventKind::Created:
      line += " size=" + std::to_string(e.size) + " dist=" + format_number(e.value);
      break;
    case EventKind::Delivered:
      line += " hops=" + std::to_string(e.hops);
      break;
    default:
      break;
  }
  return line;
}

void EventLog::write_text(std::ostream& out) const {
  for (const auto& e : events_) out << format_event(e) << '\n';
}

std::string EventLog::to_text() const {
  std::ostringstream ss;
  write_text(ss);
  return ss.str();
}

std::string EventLog::tail(std::size_t n) const {
  std::string out;
  const std::size_t start = events_.size() > n ? events_.size() - n : 0;
  for (std::size_t i = start; i < events_.size(); ++i) out += format_event(events_[i]) + '\n';
  return out;
}

}  // namespace dtnsim
