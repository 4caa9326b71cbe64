#include "katlas/affinity.hpp"

#include <algorithm>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

namespace katlas {

namespace {

constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

void saturating_increment(std::uint64_t &count) {
  if (count != std::numeric_limits<std::uint64_t>::max())
    ++count;
}

} // namespace

AffinityState::AffinityState(std::size_t radius)
    : radius_(radius), window_(2 * radius + 1) {}

void AffinityState::accumulate(BlockId block) {
  if (block >= occurrences_.size()) {
    occurrences_.resize(std::size_t{block} + 1, 0);
    rows_.resize(std::size_t{block} + 1);
  }
  if (occurrences_[block] == 0)
    ++seen_;
  saturating_increment(occurrences_[block]);

  const std::size_t cap = window_.size();
  if (filled_ < cap) {
    window_[(head_ + filled_) % cap] = block;
    ++filled_;
  } else {
    window_[head_] = block;
    head_ = (head_ + 1) % cap;
  }
  if (filled_ < cap)
    return;

  ++full_windows_;
  Row &row = rows_[window_[(head_ + radius_) % cap]];
  for (BlockId neighbor : window_)
    saturating_increment(row[neighbor]);
}

std::uint64_t AffinityState::pair_count(BlockId center,
                                        BlockId neighbor) const {
  if (center >= rows_.size())
    return 0;
  const auto it = rows_[center].find(neighbor);
  return it == rows_[center].end() ? 0 : it->second;
}

std::uint64_t AffinityState::occurrences(BlockId block) const {
  return block < occurrences_.size() ? occurrences_[block] : 0;
}

std::vector<BlockId> AffinityState::blocks() const {
  std::vector<BlockId> out;
  for (BlockId b = 0; b < occurrences_.size(); ++b)
    if (occurrences_[b] > 0)
      out.push_back(b);
  return out;
}

std::size_t AffinityState::pair_cardinality() const {
  std::size_t total = 0;
  for (const auto &row : rows_)
    total += row.size();
  return total;
}

std::vector<std::pair<BlockId, std::uint64_t>>
AffinityState::row(BlockId center) const {
  if (center >= rows_.size())
    return {};
  return {rows_[center].begin(), rows_[center].end()};
}

// ---------------------------------------------------------------------------

std::size_t AffinityMatrix::index_of(BlockId block) const {
  if (block >= index_.size() || index_[block] == npos)
    throw std::out_of_range("block " + std::to_string(block) +
                            " is not in the affinity matrix");
  return index_[block];
}

bool AffinityMatrix::contains(BlockId block) const {
  return block < index_.size() && index_[block] != npos;
}

double AffinityMatrix::f(BlockId a, BlockId b) const {
  const auto &row = rows_[index_of(a)];
  const std::size_t j = index_of(b);
  const auto it = std::lower_bound(
      row.begin(), row.end(), j,
      [](const auto &entry, std::size_t key) { return entry.first < key; });
  return it != row.end() && it->first == j ? it->second : 0.0;
}

std::uint64_t AffinityMatrix::occurrences(BlockId block) const {
  return occurrences_[index_of(block)];
}

std::vector<std::pair<BlockId, double>> AffinityMatrix::row(BlockId a) const {
  std::vector<std::pair<BlockId, double>> out;
  for (const auto &[j, value] : rows_[index_of(a)])
    out.emplace_back(blocks_[j], value);
  return out;
}

void AffinityMatrix::write_csv(std::ostream &out) const {
  out << "A,B,f\n";
  for (std::size_t i = 0; i < blocks_.size(); ++i)
    for (const auto &[j, value] : rows_[i])
      out << blocks_[i] << ',' << blocks_[j] << ',' << value << '\n';
}

AffinityMatrix finalize(const AffinityState &state) {
  AffinityMatrix m;
  m.radius_ = state.radius();
  if (!state.any_full_window())
    return m;
  m.blocks_ = state.blocks();
  if (m.blocks_.empty())
    return m;
  m.index_.assign(std::size_t{m.blocks_.back()} + 1, npos);
  for (std::size_t i = 0; i < m.blocks_.size(); ++i)
    m.index_[m.blocks_[i]] = i;

  const double width = static_cast<double>(2 * state.radius() + 1);
  m.occurrences_.reserve(m.blocks_.size());
  m.rows_.resize(m.blocks_.size());
  for (std::size_t i = 0; i < m.blocks_.size(); ++i) {
    const BlockId a = m.blocks_[i];
    const auto occ = state.occurrences(a);
    m.occurrences_.push_back(occ);
    const double denom = static_cast<double>(occ) * width;
    auto &row = m.rows_[i];
    for (const auto &[b, count] : state.row(a))
      row.emplace_back(m.index_[b], static_cast<double>(count) / denom);
    std::sort(row.begin(), row.end());
  }
  return m;
}

AffinityState accumulate(const Trace &trace, std::size_t radius) {
  AffinityState state(radius);
  for (const auto &event : trace.events)
    state.accumulate(event);
  return state;
}

AffinityMatrix compute_affinity(const Trace &trace, std::size_t radius) {
  return finalize(accumulate(trace, radius));
}

} // namespace katlas
