#include "katlas/trace.hpp"

#include <algorithm>

namespace katlas {

BlockId TraceEvent::block() const {
  if (kind_ != EventKind::BlockEnter)
    throw std::logic_error("block() on a memory event");
  return static_cast<BlockId>(payload_);
}

Address TraceEvent::address() const {
  if (kind_ == EventKind::BlockEnter)
    throw std::logic_error("address() on a block event");
  return Address{payload_, size_};
}

bool Trace::has_addresses() const {
  return std::any_of(events.begin(), events.end(),
                     [](const TraceEvent &e) { return e.is_memory(); });
}

std::size_t Trace::block_event_count() const {
  return static_cast<std::size_t>(
      std::count_if(events.begin(), events.end(),
                    [](const TraceEvent &e) { return e.is_block(); }));
}

void validate(const Trace &trace) {
  bool seen_block = false;
  for (std::size_t i = 0; i < trace.events.size(); ++i) {
    const TraceEvent &e = trace.events[i];
    if (e.is_block()) {
      if (e.block() >= trace.block_count)
        throw TraceError("block id " + std::to_string(e.block()) +
                             " outside [0, " +
                             std::to_string(trace.block_count) + ") at event " +
                             std::to_string(i),
                         i);
      seen_block = true;
    } else if (!seen_block) {
      throw TraceError("memory event before any block entry at event " +
                           std::to_string(i),
                       i);
    }
  }
}

std::vector<BlockId> block_sequence(const Trace &trace) {
  std::vector<BlockId> out;
  bool seen_block = false;
  for (std::size_t i = 0; i < trace.events.size(); ++i) {
    const TraceEvent &e = trace.events[i];
    if (e.is_block()) {
      out.push_back(e.block());
      seen_block = true;
    } else if (!seen_block) {
      throw TraceError("memory event before any block entry at event " +
                           std::to_string(i),
                       i);
    }
  }
  return out;
}

std::vector<std::size_t> attribution(const Trace &trace) {
  std::vector<std::size_t> owner(trace.events.size());
  std::size_t current = 0;
  bool seen_block = false;
  for (std::size_t i = 0; i < trace.events.size(); ++i) {
    if (trace.events[i].is_block()) {
      current = i;
      seen_block = true;
    } else if (!seen_block) {
      throw TraceError("memory event before any block entry at event " +
                           std::to_string(i),
                       i);
    }
    owner[i] = current;
  }
  return owner;
}

} // namespace katlas
