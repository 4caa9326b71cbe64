#include "oracle.hpp"

#include "katlas/affinity.hpp"
#include "katlas/cfg_sim.hpp"
#include "katlas/rng.hpp"

#include <doctest.h>

#include <sstream>

using namespace katlas;

namespace {

Trace from_blocks(const std::vector<BlockId> &seq) {
  Trace t;
  for (BlockId b : seq) {
    t.events.push_back(TraceEvent::block_enter(b));
    t.block_count = std::max(t.block_count, b + 1);
  }
  return t;
}

std::vector<BlockId> cyclic(std::size_t reps) {
  std::vector<BlockId> seq;
  for (std::size_t i = 0; i < reps; ++i)
    for (BlockId b : {0u, 1u, 2u})
      seq.push_back(b);
  return seq;
}

} // namespace

TEST_SUITE("affinity") {

TEST_CASE("A,A,A with r=1 counts the centre against three slots") {
  AffinityState s(1);
  for (int i = 0; i < 3; ++i)
    s.accumulate(BlockId{0});
  CHECK(s.pair_count(0, 0) == 3);
  CHECK(s.occurrences(0) == 3);
}

TEST_CASE("a window that never fills yields no pairs") {
  AffinityState s(1);
  s.accumulate(BlockId{0});
  s.accumulate(BlockId{1});
  CHECK(s.pair_cardinality() == 0);
  CHECK(s.occurrences(0) == 1);
  CHECK(s.occurrences(1) == 1);
  CHECK(finalize(s).empty());
}

TEST_CASE("window never exceeds 2r+1 entries") {
  AffinityState s(3);
  for (BlockId b = 0; b < 100; ++b) {
    s.accumulate(b % 5);
    CHECK(s.window_size() <= 7);
  }
  CHECK(s.window_capacity() == 7);
}

TEST_CASE("memory events are skipped") {
  AffinityState a(1), b(1);
  a.accumulate(TraceEvent::block_enter(0));
  a.accumulate(TraceEvent::load(0, 4));
  a.accumulate(TraceEvent::block_enter(1));
  a.accumulate(TraceEvent::block_enter(0));
  for (BlockId x : {0u, 1u, 0u})
    b.accumulate(x);
  CHECK(a.pair_cardinality() == b.pair_cardinality());
  CHECK(a.pair_count(1, 0) == b.pair_count(1, 0));
}

TEST_CASE("cyclic A,B,C with r=1 matches the oracle and tends to 1/3") {
  const auto seq = cyclic(100);
  const auto state = accumulate(from_blocks(seq), 1);
  CHECK(oracle::compare(state, oracle::windowed_pair_counts(seq, 1)) == "");
  // Interior centres count one self, one predecessor and one successor.
  const auto m = finalize(state);
  for (BlockId a = 0; a < 3; ++a)
    for (BlockId b = 0; b < 3; ++b) {
      CHECK(m.f(a, b) <= 1.0 / 3 + 1e-12);
      CHECK(m.f(a, b) >= 1.0 / 3 - 2.0 / 100);
    }
  CHECK(m.sym(0, 1) == doctest::Approx(1.0 / 3).epsilon(0.03));
}

TEST_CASE("single block loop tends to self-affinity 1") {
  const std::vector<BlockId> seq(1000, 4);
  const auto m = compute_affinity(from_blocks(seq), 7);
  CHECK(m.f(4, 4) == doctest::Approx(1.0).epsilon(0.02));
  CHECK(m.f(4, 4) <= 1.0);
}

TEST_CASE("row mass is 1 for interior blocks and at most 1 otherwise") {
  // Block 9 only occurs away from both ends.
  std::vector<BlockId> seq = cyclic(20);
  seq.insert(seq.begin() + 30, 9);
  const auto m = compute_affinity(from_blocks(seq), 2);
  for (BlockId a : m.blocks()) {
    double mass = 0;
    for (const auto &[b, f] : m.row(a))
      mass += f;
    CHECK(mass <= 1.0 + 1e-12);
    if (a == 9)
      CHECK(mass == doctest::Approx(1.0));
  }
}

TEST_CASE("sym is the larger direction; unknown blocks throw") {
  // f(0,7) > 0 but 7 occurs once, 0 often: the two directions differ.
  std::vector<BlockId> seq = cyclic(10);
  seq.insert(seq.begin() + 12, 7);
  const auto m = compute_affinity(from_blocks(seq), 1);
  CHECK(m.sym(0, 7) == std::max(m.f(0, 7), m.f(7, 0)));
  CHECK(m.sym(7, 0) == m.sym(0, 7));
  CHECK(m.sym(1, 1) == m.f(1, 1));
  CHECK_THROWS_AS(m.f(0, 42), std::out_of_range);
  CHECK_THROWS_AS(m.sym(42, 0), std::out_of_range);
}

TEST_CASE("pipeline2 loops see each other only at the junction") {
  const auto trace = run(programs::pipeline2(), 1);
  const auto seq = block_sequence(trace);
  const auto counts = oracle::windowed_pair_counts(seq, 2);
  const auto m = compute_affinity(trace, 2);
  // Producer header 0 and consumer body 3: nonzero only near the switch.
  const auto it = counts.find({0, 3});
  const std::uint64_t junction = it == counts.end() ? 0 : it->second;
  CHECK(junction <= 2);
  CHECK(m.f(0, 3) == doctest::Approx(static_cast<double>(junction) /
                                     (m.occurrences(0) * 5.0)));
  CHECK(m.f(0, 3) < 0.05);
}

TEST_CASE("streaming equals the brute-force recount on random sequences") {
  Xoshiro256 rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    const auto n = rng.between(0, 400);
    const auto k = rng.between(1, 12);
    std::vector<BlockId> seq;
    for (std::uint64_t i = 0; i < n; ++i)
      seq.push_back(static_cast<BlockId>(rng.between(0, k - 1)));
    for (std::size_t r : {0u, 1u, 2u, 4u, 7u, 8u}) {
      CAPTURE(trial);
      CAPTURE(r);
      const auto state = accumulate(from_blocks(seq), r);
      CHECK(oracle::compare(state, oracle::windowed_pair_counts(seq, r)) == "");
    }
  }
}

TEST_CASE("counter tables depend on blocks, not trace length") {
  const auto p = programs::nested_loop(16, 16);
  const auto short_run = accumulate(run(p, 1), 7);
  const auto long_run = accumulate(run(programs::nested_loop(160, 16), 1), 7);
  CHECK(short_run.pair_cardinality() == long_run.pair_cardinality());
  CHECK(short_run.occurrence_cardinality() == long_run.occurrence_cardinality());
}

TEST_CASE("CSV dump lists nonzero entries") {
  const auto m = compute_affinity(from_blocks({0, 0, 0}), 1);
  std::ostringstream out;
  m.write_csv(out);
  // One full window, three occurrences: 3 / (3 * 3).
  CHECK(out.str() == "A,B,f\n0,0,0.333333\n");
}

} // TEST_SUITE
