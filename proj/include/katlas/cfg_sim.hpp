#pragma once

// Control-flow-graph programs and a deterministic interpreter that turns
// them into traces. Programs stand in for instrumented executables: each
// block entry emits BasicBlock, each memory effect a Load/Store with an
// address affine in the enclosing loop indices.

#include "katlas/params.hpp"
#include "katlas/trace.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace katlas {

/// stride * index(loop), where index is the current iteration of a counted
/// loop (0-based) or the current depth of a recursion.
struct AffineTerm {
  BlockId loop = 0;
  std::int64_t stride = 0;
  friend bool operator==(const AffineTerm &, const AffineTerm &) = default;
};

struct MemoryEffect {
  bool is_store = false;
  std::uint64_t base = 0;
  std::vector<AffineTerm> terms;
  std::uint32_t size = 4;
  friend bool operator==(const MemoryEffect &, const MemoryEffect &) = default;
};

struct Halt {
  friend bool operator==(const Halt &, const Halt &) = default;
};

struct Jump {
  BlockId target = 0;
  friend bool operator==(const Jump &, const Jump &) = default;
};

/// Loop header. Each visit either starts another iteration (goes to body)
/// or, once `bound` iterations ran, resets its counter and leaves. A missing
/// exit halts the program.
struct CountedLoop {
  BlockId body = 0;
  std::optional<BlockId> exit;
  std::uint64_t bound = 0;
  friend bool operator==(const CountedLoop &, const CountedLoop &) = default;
};

struct BranchArm {
  BlockId target = 0;
  double probability = 0.0;
  friend bool operator==(const BranchArm &, const BranchArm &) = default;
};

/// Probabilistic branch; one PRNG draw per visit.
struct Branch {
  std::vector<BranchArm> arms;
  friend bool operator==(const Branch &, const Branch &) = default;
};

/// Exit test of a recursive call chain, flattened into a cycle: each visit
/// deepens by one; at `depth` the chain unwinds through `exit`.
struct Recursion {
  BlockId call = 0;
  std::optional<BlockId> exit;
  std::uint64_t depth = 0;
  friend bool operator==(const Recursion &, const Recursion &) = default;
};

using Successor = std::variant<Halt, Jump, CountedLoop, Branch, Recursion>;

struct CfgBlock {
  std::string name;
  std::vector<MemoryEffect> memory;
  Successor next = Halt{};
  friend bool operator==(const CfgBlock &, const CfgBlock &) = default;
};

struct GroundTruthKernel {
  std::string name;
  std::vector<BlockId> blocks; ///< sorted, unique
  /// Total body iterations over the whole run.
  std::uint64_t expected_iterations = 0;
  std::optional<std::size_t> parent;
  friend bool operator==(const GroundTruthKernel &,
                         const GroundTruthKernel &) = default;
};

struct CfgProgram {
  std::string name;
  std::vector<CfgBlock> blocks;
  BlockId entry = 0;
  std::vector<GroundTruthKernel> truth;

  std::uint32_t block_count() const {
    return static_cast<std::uint32_t>(blocks.size());
  }
  friend bool operator==(const CfgProgram &, const CfgProgram &) = default;
};

class ProgramError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Throws ProgramError on dangling targets, bad probabilities, address
/// terms that name a non-loop block, truth nesting violations, or blocks
/// from which no terminal is reachable.
void validate(const CfgProgram &program);

class EventCapExceeded : public std::runtime_error {
public:
  explicit EventCapExceeded(std::uint64_t cap)
      : std::runtime_error("event cap of " + std::to_string(cap) +
                           " exceeded; program may not terminate"),
        cap_(cap) {}
  std::uint64_t cap() const { return cap_; }

private:
  std::uint64_t cap_;
};

struct SimOptions {
  bool addresses = true;
  std::uint64_t event_cap = 100'000'000;
};

using EventSink = std::function<void(const TraceEvent &)>;

/// Executes the program, handing every event to `sink`. Deterministic for a
/// fixed seed. Throws EventCapExceeded when the cap is hit.
void run(const CfgProgram &program, std::uint64_t seed,
         const SimOptions &options, const EventSink &sink);

Trace run(const CfgProgram &program, std::uint64_t seed,
          const SimOptions &options = {});

/// Incremental construction helper used by the canonical and random
/// program generators.
class ProgramBuilder {
public:
  explicit ProgramBuilder(std::string name);

  BlockId add(std::string name);
  void set_next(BlockId block, Successor next);
  void add_load(BlockId block, std::uint64_t base,
                std::vector<AffineTerm> terms, std::uint32_t size);
  void add_store(BlockId block, std::uint64_t base,
                 std::vector<AffineTerm> terms, std::uint32_t size);
  std::size_t add_truth(std::string name, std::vector<BlockId> blocks,
                        std::uint64_t iterations,
                        std::optional<std::size_t> parent = std::nullopt);
  std::uint32_t size() const { return program_.block_count(); }

  /// Validates and returns the program.
  CfgProgram build(BlockId entry) &&;

private:
  CfgProgram program_;
};

// ---------------------------------------------------------------------------
// Canonical programs

namespace programs {

CfgProgram for_loop(std::uint64_t n = 511);
CfgProgram recursion(std::uint64_t depth = 512);
CfgProgram nested_loop(std::uint64_t outer = 64, std::uint64_t inner = 64);
CfgProgram rare_conditional(double p = 0.01, std::uint64_t n = 10000,
                            std::uint32_t arm_blocks = 6);
CfgProgram wide_kernel(std::uint64_t n = 512, std::uint32_t width = 5);
CfgProgram pipeline2(std::uint64_t n = 20);
CfgProgram fsm(std::uint64_t steps = 64, std::uint64_t handler = 32);

} // namespace programs

struct CanonicalProgram {
  CfgProgram program;
  /// Operating point at which the program's ground truth is recovered.
  AnalysisParams params;
};

/// for_loop, recursion, nested_loop, rare_conditional, wide_kernel,
/// pipeline2, fsm, in that order.
std::vector<CanonicalProgram> canonical_programs();
/// Throws std::out_of_range for unknown names.
CanonicalProgram canonical_program(const std::string &name);

// ---------------------------------------------------------------------------
// Random structured programs

struct RandomProgramOptions {
  std::uint32_t max_depth = 3;
  std::uint32_t max_statements = 3;
  std::uint64_t min_trip = 2;
  std::uint64_t max_trip = 64;
  double loop_weight = 0.45;
  double branch_weight = 0.25;
  double recursion_weight = 0.05;
  std::uint32_t arrays = 4;
};

/// A random nest of loops, recursions, branches and straight-line glue,
/// with memory effects on a small shared pool of arrays.
CfgProgram random_program(std::uint64_t seed,
                          const RandomProgramOptions &options = {});

// ---------------------------------------------------------------------------
// JSON program files (format "katlas-program", version 1)

std::string to_json(const CfgProgram &program);
/// Throws ProgramError on schema violations.
CfgProgram program_from_json(const std::string &text);

} // namespace katlas
