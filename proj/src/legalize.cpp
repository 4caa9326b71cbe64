#include "katlas/legalize.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace katlas {

bool Kernel::contains(BlockId block) const {
  return std::binary_search(blocks.begin(), blocks.end(), block);
}

Legalizer::Legalizer(std::vector<KernelCandidate> candidates,
                     std::vector<std::uint64_t> seed_counts)
    : candidates_(std::move(candidates)), seed_counts_(std::move(seed_counts)) {
  const auto n = candidates_.size();
  if (seed_counts_.size() != n)
    throw std::invalid_argument("one seed count per candidate required");
  member_.resize(n);
  pending_.resize(n);
  pending_member_.resize(n);
  visited_.assign(n, false);
  run_id_.assign(n, 1);
  run_stamp_.resize(n);
  recurring_.assign(n, false);
  for (std::size_t k = 0; k < n; ++k)
    for (BlockId b : candidates_[k].blocks) {
      ensure(b);
      if (!member_[k][b]) {
        member_[k][b] = true;
        holders_[b].push_back(k);
      }
    }
  recompute_relations();
}

void Legalizer::ensure(BlockId b) {
  const std::size_t size = std::size_t{b} + 1;
  if (holders_.size() >= size)
    return;
  holders_.resize(size);
  for (std::size_t k = 0; k < candidates_.size(); ++k) {
    member_[k].resize(size, false);
    pending_member_[k].resize(size, false);
    run_stamp_[k].resize(size, 0);
  }
}

std::vector<BlockId> Legalizer::current(std::size_t i) const {
  std::vector<BlockId> out;
  for (BlockId b = 0; b < member_[i].size(); ++b)
    if (member_[i][b])
      out.push_back(b);
  return out;
}

void Legalizer::recompute_relations() {
  const auto n = candidates_.size();
  std::vector<std::vector<BlockId>> sets(n);
  for (std::size_t k = 0; k < n; ++k)
    sets[k] = current(k);

  auto subset = [&](std::size_t a, std::size_t b) {
    return std::all_of(sets[a].begin(), sets[a].end(),
                       [&](BlockId x) { return in_set(b, x); });
  };
  auto intersects = [&](std::size_t a, std::size_t b) {
    return std::any_of(sets[a].begin(), sets[a].end(),
                       [&](BlockId x) { return in_set(b, x); });
  };

  // Components of the "partial overlap" relation.
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x)
      x = parent[x] = parent[parent[x]];
    return x;
  };
  std::vector<std::vector<bool>> contains(n, std::vector<bool>(n, false));
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      if (a != b)
        contains[a][b] = subset(b, a);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      if (!contains[a][b] && !contains[b][a] && intersects(a, b))
        parent[find(a)] = find(b);

  clears_.assign(n, std::vector<bool>(n, false));
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t l = 0; l < n; ++l)
      if (l != k)
        clears_[k][l] = contains[l][k] || find(l) != find(k);
}

void Legalizer::observe(BlockId b) {
  ensure(b);
  bool grew = false;
  for (std::size_t k = 0; k < candidates_.size(); ++k) {
    if (member_[k][b]) {
      if (run_stamp_[k][b] == run_id_[k])
        recurring_[k] = true;
      run_stamp_[k][b] = run_id_[k];
      visited_[k] = true;
      for (BlockId p : pending_[k]) {
        pending_member_[k][p] = false;
        if (!member_[k][p]) {
          member_[k][p] = true;
          holders_[p].push_back(k);
          grew = true;
        }
      }
      pending_[k].clear();
      continue;
    }
    ++run_id_[k];
    if (!visited_[k])
      continue;
    bool clear = false;
    for (std::size_t l : holders_[b])
      if (clears_[k][l]) {
        clear = true;
        break;
      }
    if (clear) {
      for (BlockId p : pending_[k])
        pending_member_[k][p] = false;
      pending_[k].clear();
    } else if (!pending_member_[k][b]) {
      pending_member_[k][b] = true;
      pending_[k].push_back(b);
    }
  }
  if (grew)
    recompute_relations();
}

std::vector<Kernel> Legalizer::finish() const {
  const auto n = candidates_.size();
  std::vector<std::vector<BlockId>> sets(n);
  for (std::size_t k = 0; k < n; ++k)
    sets[k] = current(k);

  auto strict_subset = [&](std::size_t a, std::size_t b) {
    return sets[a].size() < sets[b].size() &&
           std::includes(sets[b].begin(), sets[b].end(), sets[a].begin(),
                         sets[a].end());
  };

  struct Group {
    std::vector<BlockId> blocks;
    BlockId seed;
    std::uint64_t count;
  };
  std::vector<Group> groups;
  for (std::size_t k = 0; k < n; ++k) {
    if (!recurring_[k]) {
      bool absorbed = false;
      for (std::size_t l = 0; l < n && !absorbed; ++l)
        absorbed = l != k && strict_subset(k, l);
      if (absorbed)
        continue;
    }
    const BlockId seed = candidates_[k].seed;
    const auto count = seed_counts_[k];
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const Group &g) { return g.blocks == sets[k]; });
    if (it == groups.end()) {
      groups.push_back({sets[k], seed, count});
    } else if (count > it->count || (count == it->count && seed < it->seed)) {
      it->seed = seed;
      it->count = count;
    }
  }
  std::stable_sort(groups.begin(), groups.end(),
                   [](const Group &a, const Group &b) {
                     return a.count != b.count ? a.count > b.count
                                               : a.seed < b.seed;
                   });

  std::vector<Kernel> kernels;
  for (auto &g : groups) {
    Kernel kernel;
    kernel.id = static_cast<std::uint32_t>(kernels.size());
    kernel.blocks = std::move(g.blocks);
    kernel.seed = g.seed;
    kernels.push_back(std::move(kernel));
  }
  hierarchy(kernels);
  return kernels;
}

namespace {

std::vector<std::uint64_t> block_counts(const Trace &trace) {
  std::vector<std::uint64_t> counts;
  for (const auto &event : trace.events)
    if (event.is_block()) {
      if (event.block() >= counts.size())
        counts.resize(std::size_t{event.block()} + 1, 0);
      ++counts[event.block()];
    }
  return counts;
}

} // namespace

LegalizeResult legalize(const Trace &trace,
                        const std::vector<KernelCandidate> &candidates) {
  const auto counts = block_counts(trace);
  auto count = [&](BlockId b) -> std::uint64_t {
    return b < counts.size() ? counts[b] : 0;
  };

  LegalizeResult result;
  std::vector<KernelCandidate> accepted;
  std::vector<std::uint64_t> seed_counts;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto &c = candidates[i];
    const auto missing = std::find_if(c.blocks.begin(), c.blocks.end(),
                                      [&](BlockId b) { return count(b) == 0; });
    if (c.blocks.empty() || missing != c.blocks.end()) {
      result.diagnostics.push_back(
          "candidate " + std::to_string(i) + " (seed " +
          std::to_string(c.seed) + ") rejected: " +
          (c.blocks.empty() ? std::string("no blocks")
                            : "block " + std::to_string(*missing) +
                                  " does not occur in the trace"));
      continue;
    }
    accepted.push_back(c);
    seed_counts.push_back(count(c.seed));
  }

  Legalizer legalizer(std::move(accepted), std::move(seed_counts));
  for (const auto &event : trace.events)
    legalizer.observe(event);
  result.kernels = legalizer.finish();
  return result;
}

void hierarchy(std::vector<Kernel> &kernels) {
  const auto n = kernels.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (kernels[i].id != i)
      throw std::invalid_argument("kernel ids must be 0..n-1 in order");
    kernels[i].parents.clear();
    kernels[i].children.clear();
  }
  auto strict_subset = [&](std::size_t a, std::size_t b) {
    const auto &x = kernels[a].blocks;
    const auto &y = kernels[b].blocks;
    return x.size() < y.size() &&
           std::includes(y.begin(), y.end(), x.begin(), x.end());
  };
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) {
      if (a == b || !strict_subset(a, b))
        continue;
      bool direct = true;
      for (std::size_t c = 0; c < n && direct; ++c)
        direct = !(c != a && c != b && strict_subset(a, c) &&
                   strict_subset(c, b));
      if (direct) {
        kernels[a].parents.push_back(static_cast<std::uint32_t>(b));
        kernels[b].children.push_back(static_cast<std::uint32_t>(a));
      }
    }
  for (auto &k : kernels) {
    std::sort(k.parents.begin(), k.parents.end());
    std::sort(k.children.begin(), k.children.end());
  }
}


double coverage(const Trace &trace, const std::vector<Kernel> &kernels) {
  const auto counts = block_counts(trace);
  std::uint64_t total = 0;
  std::uint64_t covered = 0;
  for (BlockId b = 0; b < counts.size(); ++b) {
    total += counts[b];
    if (std::any_of(kernels.begin(), kernels.end(),
                    [&](const Kernel &k) { return k.contains(b); }))
      covered += counts[b];
  }
  return total == 0 ? 0.0
                    : static_cast<double>(covered) / static_cast<double>(total);
}

std::vector<double> coverage_contributions(const Trace &trace,
                                           const std::vector<Kernel> &kernels) {
  const auto counts = block_counts(trace);
  std::uint64_t total = 0;
  for (auto c : counts)
    total += c;
  std::vector<double> out;
  for (const auto &k : kernels) {
    std::uint64_t covered = 0;
    for (BlockId b : k.blocks)
      if (b < counts.size())
        covered += counts[b];
    out.push_back(total == 0 ? 0.0
                             : static_cast<double>(covered) /
                                   static_cast<double>(total));
  }
  return out;
}

} // namespace katlas
