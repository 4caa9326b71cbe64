#pragma once

// Trace replay that closes candidates over the blocks seen between their
// visits, fuses duplicates and derives the subset hierarchy.

#include "katlas/detect.hpp"
#include "katlas/trace.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace katlas {

struct Kernel {
  std::uint32_t id = 0;
  std::vector<BlockId> blocks;         ///< ascending
  std::vector<std::uint32_t> parents;  ///< ascending kernel ids
  std::vector<std::uint32_t> children; ///< ascending kernel ids
  BlockId seed = 0;

  bool contains(BlockId block) const;
  friend bool operator==(const Kernel &, const Kernel &) = default;
};

/// Streaming replay over the block sequence.
///
/// Every candidate keeps a pending set of blocks seen since its last visit.
/// Revisiting the candidate merges pending into its set immediately. A block
/// outside the candidate drops the pending set when it belongs to another
/// candidate that encloses this one, or to one that is unrelated to it;
/// candidates linked by partial overlap (neither contains the other) do not
/// clear each other, so their pending blocks accumulate and they grow
/// together. The relations are recomputed whenever a set grows.
///
/// A candidate is "recurring" if some contiguous run of its blocks repeats a
/// block. Non-recurring candidates that end as a strict subset of another
/// set are absorbed into it; the rest are deduplicated by exact set.
class Legalizer {
public:
  /// `seed_counts[i]` is the occurrence count of candidates[i].seed and
  /// orders the kernel ids.
  Legalizer(std::vector<KernelCandidate> candidates,
            std::vector<std::uint64_t> seed_counts);

  void observe(BlockId block);
  void observe(const TraceEvent &event) {
    if (event.is_block())
      observe(event.block());
  }

  /// Current (live) block set of candidate i, ascending.
  std::vector<BlockId> current(std::size_t i) const;
  bool recurring(std::size_t i) const { return recurring_[i]; }

  std::vector<Kernel> finish() const;

private:
  bool in_set(std::size_t k, BlockId b) const {
    return b < member_[k].size() && member_[k][b];
  }
  void ensure(BlockId b);
  void recompute_relations();

  std::vector<KernelCandidate> candidates_;
  std::vector<std::uint64_t> seed_counts_;
  std::vector<std::vector<bool>> member_;
  std::vector<std::vector<BlockId>> pending_;
  std::vector<std::vector<bool>> pending_member_;
  std::vector<bool> visited_;
  // clears_[k][l]: a block of l outside k drops k's pending set.
  std::vector<std::vector<bool>> clears_;
  std::vector<std::vector<std::size_t>> holders_; // block -> candidates
  std::vector<std::uint64_t> run_id_;
  std::vector<std::vector<std::uint64_t>> run_stamp_;
  std::vector<bool> recurring_;
};

struct LegalizeResult {
  std::vector<Kernel> kernels;
  /// One line per rejected candidate.
  std::vector<std::string> diagnostics;
};

/// Candidates naming blocks that never occur in the trace are rejected.
LegalizeResult legalize(const Trace &trace,
                        const std::vector<KernelCandidate> &candidates);

/// Links A under B iff A is a strict subset of B with no kernel strictly in
/// between. Ids must be 0..n-1 in order; parent/child lists are rebuilt.
void hierarchy(std::vector<Kernel> &kernels);

/// Fraction of BlockEnter events whose block belongs to some kernel; 0 for a
/// trace without block events.
double coverage(const Trace &trace, const std::vector<Kernel> &kernels);

/// Per kernel, the fraction of BlockEnter events whose block it contains.
std::vector<double> coverage_contributions(const Trace &trace,
                                           const std::vector<Kernel> &kernels);

} // namespace katlas
