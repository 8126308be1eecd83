#include "dtnsim/message.hpp"

#include <algorithm>

namespace dtnsim {

const BufferEntry* Buffer::find(MessageId id) const {
  if (!contains(id)) return nullptr;
  for (const auto& e : entries_) {
    if (e.message.id == id) return &e;
  }
  return nullptr;
}

double Buffer::occupancy() const {
  if (capacity_ == kUnlimitedCapacity || capacity_ == 0) return 0.0;
  return static_cast<double>(used_) / static_cast<double>(capacity_);
}

bool Buffer::can_admit(std::uint64_t size, const MessageFilter& pinned) const {
  if (size > capacity_) return false;
  std::uint64_t pinned_bytes = 0;
  if (pinned) {
    for (const auto& e : entries_) {
      if (pinned(e.message.id)) pinned_bytes += e.message.size;
    }
  }
  return pinned_bytes + size <= capacity_;
}

std::optional<BufferEntry> Buffer::remove(MessageId id) {
  if (!contains(id)) return std::nullopt;
  auto it = std::find_if(entries_.begin(), entries_.end(), [&](const auto& e) { return e.message.id == id; });
  BufferEntry out = std::move(*it);
  entries_.erase(it);
  ids_.erase(id);
  used_ -= out.message.size;
  return out;
}

EnqueueResult enqueue_message(Buffer& buffer, Message msg, double now, const MessageFilter& pinned) {
  EnqueueResult result;
  if (buffer.contains(msg.id) || !buffer.can_admit(msg.size, pinned)) return result;

  // Entries are kept in receive order, so the front is always the oldest.
  auto it = buffer.entries_.begin();
  while (buffer.capacity_ - buffer.used_ < msg.size) {
    while (pinned && pinned(it->message.id)) ++it;
    buffer.used_ -= it->message.size;
    buffer.ids_.erase(it->message.id);
    result.dropped.push_back(std::move(it->message));
    it = buffer.entries_.erase(it);
  }

  buffer.used_ += msg.size;
  buffer.ids_.insert(msg.id);
  buffer.entries_.push_back({std::move(msg), now});
  result.accepted = true;
  return result;
}

}  // namespace dtnsim
