#pragma once

// Brute-force reference computations used to check the streaming code.

#include "katlas/affinity.hpp"
#include "katlas/memdep.hpp"
#include "katlas/trace.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace katlas::oracle {

using PairCounts = std::map<std::pair<BlockId, BlockId>, std::uint64_t>;

/// For every index i >= 2r of the block sequence, the block at i-r counts
/// every block in [i-2r, i].
inline PairCounts windowed_pair_counts(const std::vector<BlockId> &seq,
                                       std::size_t r) {
  PairCounts counts;
  for (std::size_t i = 2 * r; i < seq.size(); ++i) {
    const BlockId center = seq[i - r];
    for (std::size_t j = i - 2 * r; j <= i; ++j)
      ++counts[{center, seq[j]}];
  }
  return counts;
}

/// Empty string when the state holds exactly the oracle's counters.
inline std::string compare(const AffinityState &state, const PairCounts &want) {
  for (const auto &[key, count] : want) {
    const auto got = state.pair_count(key.first, key.second);
    if (got != count)
      return "pair (" + std::to_string(key.first) + "," +
             std::to_string(key.second) + "): streaming " +
             std::to_string(got) + " vs oracle " + std::to_string(count);
  }
  if (state.pair_cardinality() != want.size())
    return "streaming holds " + std::to_string(state.pair_cardinality()) +
           " counters, oracle " + std::to_string(want.size());
  return {};
}

/// Innermost instance covering event i by direct scan.
inline std::uint64_t innermost(const std::vector<Kernel> &kernels,
                               const std::vector<KernelInstance> &instances,
                               std::size_t i) {
  std::uint64_t best = kBackgroundInstance;
  std::size_t best_size = 0;
  std::uint32_t best_kernel = 0;
  for (const auto &inst : instances) {
    if (inst.start > i || inst.end < i)
      continue;
    std::size_t size = 0;
    for (const auto &k : kernels)
      if (k.id == inst.kernel)
        size = k.blocks.size();
    if (best == kBackgroundInstance || size < best_size ||
        (size == best_size && inst.kernel < best_kernel)) {
      best = inst.id;
      best_size = size;
      best_kernel = inst.kernel;
    }
  }
  return best;
}

struct DependencyAudit {
  std::size_t checked = 0;
  std::size_t false_edges = 0;
  std::size_t missing = 0; ///< only computed when completeness was checked
  bool completeness_checked = false;
  std::string first_problem;
};

/// Re-verifies every reported dependency against the raw events: the store
/// precedes the load, byte ranges overlap, the store is still the last
/// writer of some shared byte, and both ends are attributed to the reported
/// instances. On traces up to `completeness_limit` events, also recomputes
/// the full dependency set by backward scans and counts omissions.
inline DependencyAudit audit(const Trace &trace,
                             const std::vector<Kernel> &kernels,
                             const std::vector<KernelInstance> &instances,
                             const DependencyResult &deps,
                             std::size_t completeness_limit = 20000) {
  DependencyAudit a;
  const auto &ev = trace.events;
  auto fail = [&](const std::string &why) {
    ++a.false_edges;
    if (a.first_problem.empty())
      a.first_problem = why;
  };
  for (const auto &d : deps.dependencies) {
    ++a.checked;
    if (d.store_event >= d.load_event || d.load_event >= ev.size() ||
        ev[d.store_event].kind() != EventKind::Store ||
        ev[d.load_event].kind() != EventKind::Load) {
      fail("bad event kinds/order for load " + std::to_string(d.load_event));
      continue;
    }
    const Address s = ev[d.store_event].address();
    const Address l = ev[d.load_event].address();
    if (!s.overlaps(l)) {
      fail("no byte overlap for load " + std::to_string(d.load_event));
      continue;
    }
    bool live = false;
    const auto lo = std::max(s.value, l.value);
    const auto hi = std::min(s.end(), l.end());
    for (auto byte = lo; byte < hi && !live; ++byte) {
      bool overwritten = false;
      for (std::size_t k = d.store_event + 1; k < d.load_event; ++k)
        if (ev[k].kind() == EventKind::Store &&
            ev[k].address().overlaps(Address{byte, 1})) {
          overwritten = true;
          break;
        }
      live = !overwritten;
    }
    if (!live) {
      fail("store " + std::to_string(d.store_event) +
           " is not the last writer for load " + std::to_string(d.load_event));
      continue;
    }
    if (innermost(kernels, instances, d.store_event) != d.producer ||
        innermost(kernels, instances, d.load_event) != d.consumer)
      fail("wrong attribution for load " + std::to_string(d.load_event));
  }

  if (ev.size() <= completeness_limit) {
    a.completeness_checked = true;
    std::set<std::pair<std::size_t, std::uint64_t>> expected;
    for (std::size_t j = 0; j < ev.size(); ++j) {
      if (ev[j].kind() != EventKind::Load)
        continue;
      const Address l = ev[j].address();
      for (auto byte = l.value; byte < l.end(); ++byte)
        for (std::size_t k = j; k-- > 0;)
          if (ev[k].kind() == EventKind::Store &&
              ev[k].address().overlaps(Address{byte, 1})) {
            expected.insert({j, innermost(kernels, instances, k)});
            break;
          }
    }
    std::set<std::pair<std::size_t, std::uint64_t>> reported;
    for (const auto &d : deps.dependencies)
      reported.insert({d.load_event, d.producer});
    for (const auto &e : expected)
      if (!reported.count(e))
        ++a.missing;
    if (reported.size() != deps.dependencies.size())
      fail("duplicate dependency records");
  }
  return a;
}

} // namespace katlas::oracle
