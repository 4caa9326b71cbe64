#include "katlas/cfg_sim.hpp"
#include "katlas/trace.hpp"

#include <doctest.h>

using namespace katlas;

TEST_SUITE("trace") {

TEST_CASE("events carry exactly the payload of their kind") {
  const auto b = TraceEvent::block_enter(3);
  CHECK(b.is_block());
  CHECK(b.block() == 3);
  CHECK_THROWS_AS(b.address(), std::logic_error);

  const auto l = TraceEvent::load(0x10, 4);
  CHECK(l.kind() == EventKind::Load);
  CHECK(l.address() == Address{0x10, 4});
  CHECK_THROWS_AS(l.block(), std::logic_error);

  CHECK_THROWS_AS(TraceEvent::store(0, 0), std::invalid_argument);
}

TEST_CASE("address ranges are half open") {
  const Address a{0x10, 4};
  CHECK(a.end() == 0x14);
  CHECK(a.overlaps(Address{0x13, 1}));
  CHECK_FALSE(a.overlaps(Address{0x14, 4}));
  CHECK_FALSE(a.overlaps(Address{0x0c, 4}));
  CHECK(a.overlaps(Address{0x0c, 5}));
}

TEST_CASE("block_sequence drops memory events") {
  Trace t;
  t.block_count = 5;
  t.events = {TraceEvent::block_enter(3), TraceEvent::load(0x10, 4),
              TraceEvent::block_enter(4), TraceEvent::store(0x10, 4)};
  CHECK(block_sequence(t) == std::vector<BlockId>{3, 4});
  CHECK(t.block_event_count() == 2);
  CHECK(t.has_addresses());

  CHECK(block_sequence(Trace{}).empty());
}

TEST_CASE("a leading memory event is a structural error naming its index") {
  Trace t;
  t.block_count = 2;
  t.events = {TraceEvent::load(0, 1), TraceEvent::block_enter(0)};
  try {
    (void)block_sequence(t);
    FAIL("expected TraceError");
  } catch (const TraceError &e) {
    CHECK(e.index() == 0);
  }
  CHECK_THROWS_AS(validate(t), TraceError);
  CHECK_THROWS_AS(attribution(t), TraceError);
}

TEST_CASE("validate rejects out-of-range blocks") {
  Trace t;
  t.block_count = 2;
  t.events = {TraceEvent::block_enter(0), TraceEvent::block_enter(2)};
  try {
    validate(t);
    FAIL("expected TraceError");
  } catch (const TraceError &e) {
    CHECK(e.index() == 1);
  }
}

TEST_CASE("memory events attribute to the latest block entry") {
  Trace t;
  t.block_count = 3;
  t.events = {TraceEvent::block_enter(0), TraceEvent::load(0, 1),
              TraceEvent::load(8, 1), TraceEvent::block_enter(2),
              TraceEvent::store(0, 1)};
  CHECK(attribution(t) == std::vector<std::size_t>{0, 0, 0, 3, 3});
}

TEST_CASE("for_loop(511) enters 1 + 3*511 + 1 blocks") {
  const auto trace = run(programs::for_loop(511), 1);
  const auto seq = block_sequence(trace);
  REQUIRE(seq.size() == 1 + 3 * 511 + 1);
  CHECK(seq.front() == 0);
  CHECK(seq.back() == 1);
  for (std::size_t i = 0; i < 511; ++i) {
    CHECK(seq[1 + 3 * i] == 1);
    CHECK(seq[2 + 3 * i] == 2);
    CHECK(seq[3 + 3 * i] == 3);
  }
  CHECK_NOTHROW(validate(trace));
}

} // TEST_SUITE
