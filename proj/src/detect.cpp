#include "katlas/detect.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace katlas {

void DetectParams::validate() const {
  if (!(threshold > 0.0 && threshold <= 1.0))
    throw std::invalid_argument("threshold must be in (0, 1]");
  if (hot_count < 1)
    throw std::invalid_argument("hot count must be at least 1");
}

double set_score(const AffinityMatrix &matrix,
                 std::span<const BlockId> blocks) {
  if (blocks.empty())
    throw std::invalid_argument("set_score of an empty set");
  std::vector<BlockId> sorted(blocks.begin(), blocks.end());
  std::sort(sorted.begin(), sorted.end());
  double score = std::numeric_limits<double>::infinity();
  for (BlockId a : sorted) {
    double mass = 0.0;
    for (BlockId b : sorted)
      mass += matrix.sym(a, b);
    score = std::min(score, mass);
  }
  return score;
}

namespace {

// Symmetrised adjacency over dense matrix positions.
std::vector<std::vector<std::pair<std::size_t, double>>>
symmetric_adjacency(const AffinityMatrix &matrix) {
  const auto &blocks = matrix.blocks();
  const auto n = blocks.size();
  std::vector<std::vector<std::pair<std::size_t, double>>> adj(n);
  auto position = [&](BlockId b) {
    return static_cast<std::size_t>(
        std::lower_bound(blocks.begin(), blocks.end(), b) - blocks.begin());
  };
  for (std::size_t i = 0; i < n; ++i)
    for (const auto &[b, value] : matrix.row(blocks[i])) {
      const auto j = position(b);
      adj[i].emplace_back(j, value);
      if (j != i)
        adj[j].emplace_back(i, value);
    }
  for (auto &list : adj) {
    std::sort(list.begin(), list.end());
    // Merge duplicate (j, f(i,j)) / (j, f(j,i)) entries into their max.
    std::vector<std::pair<std::size_t, double>> merged;
    for (const auto &entry : list) {
      if (!merged.empty() && merged.back().first == entry.first)
        merged.back().second = std::max(merged.back().second, entry.second);
      else
        merged.push_back(entry);
    }
    list = std::move(merged);
  }
  return adj;
}

} // namespace

std::vector<KernelCandidate> detect(const AffinityMatrix &matrix,
                                    const DetectParams &params) {
  params.validate();
  std::vector<KernelCandidate> out;
  if (matrix.empty())
    return out;

  const auto &blocks = matrix.blocks();
  const auto n = blocks.size();
  const auto adj = symmetric_adjacency(matrix);

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i)
    order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) {
    return matrix.occurrences(blocks[x]) > matrix.occurrences(blocks[y]);
  });

  std::vector<bool> explained(n, false);
  std::vector<double> gain(n);
  std::vector<bool> member(n);
  constexpr double kSlack = 1e-9;

  for (std::size_t seed : order) {
    if (matrix.occurrences(blocks[seed]) < params.hot_count)
      break;
    if (explained[seed])
      continue;

    std::fill(gain.begin(), gain.end(), 0.0);
    std::fill(member.begin(), member.end(), false);
    std::vector<std::size_t> set;
    auto add = [&](std::size_t i) {
      member[i] = true;
      set.push_back(i);
      for (const auto &[j, value] : adj[i])
        gain[j] += value;
    };
    auto exact_score = [&] {
      std::vector<BlockId> ids;
      for (auto i : set)
        ids.push_back(blocks[i]);
      return set_score(matrix, ids);
    };

    add(seed);
    bool ok = false;
    double score = 0.0;
    for (;;) {
      double weakest = std::numeric_limits<double>::infinity();
      for (auto i : set)
        weakest = std::min(weakest, gain[i]);
      if (weakest >= params.threshold - kSlack) {
        score = exact_score();
        if (score >= params.threshold - kSlack) {
          ok = true;
          break;
        }
      }
      std::size_t best = n;
      double best_gain = 0.0;
      for (std::size_t j = 0; j < n; ++j)
        if (!member[j] && gain[j] > best_gain) {
          best = j;
          best_gain = gain[j];
        }
      if (best == n)
        break;
      add(best);
    }

    if (!ok) {
      explained[seed] = true;
      continue;
    }
    KernelCandidate candidate;
    candidate.seed = blocks[seed];
    candidate.score = score;
    for (auto i : set) {
      candidate.blocks.push_back(blocks[i]);
      explained[i] = true;
    }
    out.push_back(std::move(candidate));
  }
  return out;
}

} // namespace katlas
