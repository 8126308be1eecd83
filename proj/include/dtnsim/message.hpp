#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

namespace dtnsim {

using NodeId = std::uint32_t;
using MessageId = std::uint32_t;

inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();
inline constexpr MessageId kNoMessage = 0;
inline constexpr std::uint64_t kUnlimitedCapacity = std::numeric_limits<std::uint64_t>::max();

/// Display name of a message id: "M1", "M2", ...
inline std::string message_name(MessageId id) { return "M" + std::to_string(id); }

struct Message {
  MessageId id = kNoMessage;
  NodeId source = kNoNode;
  NodeId destination = kNoNode;
  std::uint64_t size = 0;  // bytes
  double created_at = 0.0;
  std::vector<NodeId> hops;  // starts with source

  std::string name() const { return message_name(id); }
};

struct BufferEntry {
  Message message;
  double received_at = 0.0;
};

/// Predicate over message ids, e.g. "messages pinned by an outgoing transfer".
using MessageFilter = std::function<bool(MessageId)>;

struct EnqueueResult {
  bool accepted = false;
  std::vector<Message> dropped;
};

/// Byte-bounded store of messages ordered by receive time.
class Buffer {
 public:
  explicit Buffer(std::uint64_t capacity = kUnlimitedCapacity) : capacity_(capacity) {}

  std::uint64_t capacity() const { return capacity_; }
  std::uint64_t used() const { return used_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::span<const BufferEntry> entries() const { return entries_; }

  bool contains(MessageId id) const { return ids_.contains(id); }
  const BufferEntry* find(MessageId id) const;

  /// Fraction of capacity in use; 0 for unlimited buffers.
  double occupancy() const;

  /// Whether a message of `size` bytes could be admitted by evicting only
  /// unpinned entries.
  bool can_admit(std::uint64_t size, const MessageFilter& pinned = {}) const;

  std::optional<BufferEntry> remove(MessageId id);

  friend EnqueueResult enqueue_message(Buffer& buffer, Message msg, double now, const MessageFilter& pinned);

 private:
  std::uint64_t capacity_;
  std::uint64_t used_ = 0;
  std::vector<BufferEntry> entries_;
  std::unordered_set<MessageId> ids_;
};

/// Inserts `msg`, evicting the oldest-received unpinned entries until it
/// fits. Rejects without any state change when the message is larger than
/// the capacity, is already present, or cannot fit even after evicting every
/// unpinned entry.
EnqueueResult enqueue_message(Buffer& buffer, Message msg, double now, const MessageFilter& pinned = {});

}  // namespace dtnsim
