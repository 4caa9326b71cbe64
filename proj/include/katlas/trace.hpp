#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace katlas {

/// Dense key of a static basic block, in [0, block_count) for one program.
using BlockId = std::uint32_t;

/// A byte range touched by a load or store: [value, value + size).
struct Address {
  std::uint64_t value = 0;
  std::uint32_t size = 1;

  std::uint64_t end() const { return value + size; }
  bool overlaps(const Address &other) const {
    return value < other.end() && other.value < end();
  }
  friend bool operator==(const Address &, const Address &) = default;
};

enum class EventKind : std::uint8_t { BlockEnter, Load, Store };

/// One dynamic occurrence in a trace. Exactly one payload is meaningful,
/// selected by kind(); use the named constructors.
class TraceEvent {
public:
  static TraceEvent block_enter(BlockId block) {
    return TraceEvent(EventKind::BlockEnter, block, 0);
  }
  static TraceEvent load(std::uint64_t address, std::uint32_t size) {
    return TraceEvent(EventKind::Load, address, checked_size(size));
  }
  static TraceEvent store(std::uint64_t address, std::uint32_t size) {
    return TraceEvent(EventKind::Store, address, checked_size(size));
  }

  EventKind kind() const { return kind_; }
  bool is_block() const { return kind_ == EventKind::BlockEnter; }
  bool is_memory() const { return kind_ != EventKind::BlockEnter; }

  /// Only valid for BlockEnter events.
  BlockId block() const;
  /// Only valid for Load/Store events.
  Address address() const;

  friend bool operator==(const TraceEvent &, const TraceEvent &) = default;

private:
  TraceEvent(EventKind kind, std::uint64_t payload, std::uint32_t size)
      : payload_(payload), size_(size), kind_(kind) {}

  static std::uint32_t checked_size(std::uint32_t size) {
    if (size == 0)
      throw std::invalid_argument("memory access width must be >= 1");
    return size;
  }

  std::uint64_t payload_;
  std::uint32_t size_;
  EventKind kind_;
};

/// Structural violation of the trace invariants; carries the event index.
class TraceError : public std::runtime_error {
public:
  TraceError(const std::string &what, std::size_t index)
      : std::runtime_error(what), index_(index) {}
  std::size_t index() const { return index_; }

private:
  std::size_t index_;
};

/// An ordered event sequence plus the block count of the source program.
struct Trace {
  std::vector<TraceEvent> events;
  std::uint32_t block_count = 0;

  bool has_addresses() const;
  std::size_t block_event_count() const;

  friend bool operator==(const Trace &, const Trace &) = default;
};

/// Throws TraceError if a memory event precedes every BlockEnter or a block
/// id is outside [0, block_count).
void validate(const Trace &trace);

/// Projection of the BlockEnter events, in order.
std::vector<BlockId> block_sequence(const Trace &trace);

/// For every event, the index of the BlockEnter it is attributed to (the
/// event itself for BlockEnter events). Throws TraceError on a leading
/// memory event.
std::vector<std::size_t> attribution(const Trace &trace);

} // namespace katlas
