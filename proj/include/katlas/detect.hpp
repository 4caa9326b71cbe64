#pragma once

// Greedy seed-and-grow clustering of the affinity graph.

#include "katlas/affinity.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace katlas {

struct DetectParams {
  double threshold = 0.95;
  std::uint64_t hot_count = 512;

  /// Throws std::invalid_argument unless 0 < threshold <= 1, hot_count >= 1.
  void validate() const;
};

struct KernelCandidate {
  std::vector<BlockId> blocks; ///< insertion order, seed first
  BlockId seed = 0;
  double score = 0.0;
};

/// The weakest member's in-set mass: min over A of sum over B of sym(A, B).
/// Throws std::out_of_range for blocks absent from the matrix and
/// std::invalid_argument for an empty set.
double set_score(const AffinityMatrix &matrix, std::span<const BlockId> blocks);

/// Seeds are taken by occurrence count (descending, ties by ascending id)
/// until the count drops below hot_count. Each seed not yet inside an
/// emitted candidate grows by the non-member with the largest summed
/// affinity to the set until set_score reaches the threshold. A seed whose
/// growth runs out of affine blocks first emits nothing.
std::vector<KernelCandidate> detect(const AffinityMatrix &matrix,
                                    const DetectParams &params);

} // namespace katlas
