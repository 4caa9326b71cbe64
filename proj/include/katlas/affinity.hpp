#pragma once

// Windowed block affinity. For a window radius r the score f_r(A, B) is the
// share of slots in the 2r+1 windows centred on occurrences of A that hold
// B, self slot included. One pass, memory independent of trace length.

#include "katlas/trace.hpp"

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <unordered_map>
#include <utility>
#include <vector>

namespace katlas {

class AffinityState {
public:
  explicit AffinityState(std::size_t radius);

  /// Pushes one block into the window. Once the window holds 2r+1 blocks its
  /// centre is counted against every slot.
  void accumulate(BlockId block);
  /// Memory events are ignored.
  void accumulate(const TraceEvent &event) {
    if (event.is_block())
      accumulate(event.block());
  }

  std::size_t radius() const { return radius_; }
  std::size_t window_capacity() const { return window_.size(); }
  std::size_t window_size() const { return filled_; }

  std::uint64_t pair_count(BlockId center, BlockId neighbor) const;
  std::uint64_t occurrences(BlockId block) const;
  /// Blocks seen so far, ascending.
  std::vector<BlockId> blocks() const;

  /// Number of nonzero pair counters.
  std::size_t pair_cardinality() const;
  /// Number of per-block occurrence counters.
  std::size_t occurrence_cardinality() const { return seen_; }
  /// Whether any window has been completely filled.
  bool any_full_window() const { return full_windows_ > 0; }

  /// Nonzero counters of one row as (neighbor, count), unordered.
  std::vector<std::pair<BlockId, std::uint64_t>> row(BlockId center) const;

private:
  using Row = std::unordered_map<BlockId, std::uint64_t>;

  std::size_t radius_;
  std::vector<BlockId> window_;
  std::size_t head_ = 0;
  std::size_t filled_ = 0;
  std::uint64_t full_windows_ = 0;
  std::vector<Row> rows_;               // indexed by centre block
  std::vector<std::uint64_t> occurrences_; // indexed by block
  std::size_t seen_ = 0;
};

/// Normalised affinity scores. Immutable after construction.
class AffinityMatrix {
public:
  AffinityMatrix() = default;

  bool empty() const { return blocks_.empty(); }
  std::size_t radius() const { return radius_; }
  /// Present blocks, ascending.
  const std::vector<BlockId> &blocks() const { return blocks_; }
  bool contains(BlockId block) const;

  /// Throws std::out_of_range for a block absent from the matrix.
  double f(BlockId a, BlockId b) const;
  double sym(BlockId a, BlockId b) const { return std::max(f(a, b), f(b, a)); }
  std::uint64_t occurrences(BlockId block) const;
  /// Nonzero entries of row a as (b, f), ascending b.
  std::vector<std::pair<BlockId, double>> row(BlockId a) const;

  /// One "A,B,f" line per nonzero entry, rows ascending, with a header.
  void write_csv(std::ostream &out) const;

private:
  friend AffinityMatrix finalize(const AffinityState &state);

  std::size_t index_of(BlockId block) const;

  std::size_t radius_ = 0;
  std::vector<BlockId> blocks_;
  std::vector<std::size_t> index_; // block id -> position, or npos
  std::vector<std::uint64_t> occurrences_;
  std::vector<std::vector<std::pair<std::size_t, double>>> rows_;
};

/// Empty matrix if no window ever filled.
AffinityMatrix finalize(const AffinityState &state);

/// Streams the trace's block events through a fresh state.
AffinityState accumulate(const Trace &trace, std::size_t radius);
AffinityMatrix compute_affinity(const Trace &trace, std::size_t radius);

} // namespace katlas
