#include "katlas/cfg_sim.hpp"

#include "katlas/rng.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace katlas {

namespace {

template <class... Fs> struct Overloaded : Fs... {
  using Fs::operator()...;
};

bool is_counter(const Successor &next) {
  return std::holds_alternative<CountedLoop>(next) ||
         std::holds_alternative<Recursion>(next);
}

std::vector<BlockId> targets(const Successor &next) {
  return std::visit(
      Overloaded{
          [](const Halt &) { return std::vector<BlockId>{}; },
          [](const Jump &j) { return std::vector<BlockId>{j.target}; },
          [](const CountedLoop &l) {
            std::vector<BlockId> out{l.body};
            if (l.exit)
              out.push_back(*l.exit);
            return out;
          },
          [](const Branch &b) {
            std::vector<BlockId> out;
            for (const auto &arm : b.arms)
              out.push_back(arm.target);
            return out;
          },
          [](const Recursion &r) {
            std::vector<BlockId> out{r.call};
            if (r.exit)
              out.push_back(*r.exit);
            return out;
          },
      },
      next);
}

bool is_terminal(const Successor &next) {
  if (std::holds_alternative<Halt>(next))
    return true;
  if (const auto *l = std::get_if<CountedLoop>(&next))
    return !l->exit;
  if (const auto *r = std::get_if<Recursion>(&next))
    return !r->exit;
  return false;
}

std::string block_label(const CfgProgram &p, BlockId b) {
  return "block " + std::to_string(b) + " (" + p.blocks[b].name + ")";
}

} // namespace

void validate(const CfgProgram &program) {
  const auto n = program.block_count();
  if (n == 0)
    throw ProgramError("program '" + program.name + "' has no blocks");
  if (program.entry >= n)
    throw ProgramError("entry block " + std::to_string(program.entry) +
                       " out of range");

  for (BlockId b = 0; b < n; ++b) {
    const auto &block = program.blocks[b];
    for (BlockId t : targets(block.next))
      if (t >= n)
        throw ProgramError(block_label(program, b) + " targets missing block " +
                           std::to_string(t));
    if (const auto *br = std::get_if<Branch>(&block.next)) {
      if (br->arms.empty())
        throw ProgramError(block_label(program, b) + " has a branch with no arms");
      double sum = 0.0;
      for (const auto &arm : br->arms) {
        if (!(arm.probability >= 0.0 && arm.probability <= 1.0))
          throw ProgramError(block_label(program, b) +
                             " has an arm probability outside [0, 1]");
        sum += arm.probability;
      }
      if (std::abs(sum - 1.0) > 1e-9)
        throw ProgramError(block_label(program, b) +
                           " has arm probabilities summing to " +
                           std::to_string(sum));
    }
    if (const auto *r = std::get_if<Recursion>(&block.next); r && r->depth == 0)
      throw ProgramError(block_label(program, b) + " has recursion depth 0");
    for (const auto &effect : block.memory) {
      if (effect.size == 0)
        throw ProgramError(block_label(program, b) +
                           " has a zero-width memory effect");
      for (const auto &term : effect.terms)
        if (term.loop >= n || !is_counter(program.blocks[term.loop].next))
          throw ProgramError(block_label(program, b) +
                             " indexes a block that is not a loop header");
    }
  }

  // Every block reachable from entry must be able to reach a terminal.
  std::vector<std::vector<BlockId>> preds(n);
  for (BlockId b = 0; b < n; ++b)
    for (BlockId t : targets(program.blocks[b].next))
      preds[t].push_back(b);
  std::vector<bool> finishes(n, false);
  std::vector<BlockId> work;
  for (BlockId b = 0; b < n; ++b)
    if (is_terminal(program.blocks[b].next)) {
      finishes[b] = true;
      work.push_back(b);
    }
  while (!work.empty()) {
    const BlockId b = work.back();
    work.pop_back();
    for (BlockId p : preds[b])
      if (!finishes[p]) {
        finishes[p] = true;
        work.push_back(p);
      }
  }
  std::vector<bool> reached(n, false);
  work = {program.entry};
  reached[program.entry] = true;
  while (!work.empty()) {
    const BlockId b = work.back();
    work.pop_back();
    if (!finishes[b])
      throw ProgramError(block_label(program, b) +
                         " cannot reach a terminal block");
    for (BlockId t : targets(program.blocks[b].next))
      if (!reached[t]) {
        reached[t] = true;
        work.push_back(t);
      }
  }

  for (std::size_t k = 0; k < program.truth.size(); ++k) {
    const auto &t = program.truth[k];
    if (t.blocks.empty())
      throw ProgramError("ground-truth kernel '" + t.name + "' is empty");
    if (!std::is_sorted(t.blocks.begin(), t.blocks.end()) ||
        std::adjacent_find(t.blocks.begin(), t.blocks.end()) != t.blocks.end())
      throw ProgramError("ground-truth kernel '" + t.name +
                         "' blocks must be sorted and unique");
    if (t.blocks.back() >= n)
      throw ProgramError("ground-truth kernel '" + t.name +
                         "' names a missing block");
    if (t.parent) {
      if (*t.parent >= program.truth.size() || *t.parent == k)
        throw ProgramError("ground-truth kernel '" + t.name +
                           "' has an invalid parent");
      const auto &parent = program.truth[*t.parent].blocks;
      if (parent.size() <= t.blocks.size() ||
          !std::includes(parent.begin(), parent.end(), t.blocks.begin(),
                         t.blocks.end()))
        throw ProgramError("ground-truth kernel '" + t.name +
                           "' is not a strict subset of its parent");
    }
  }
}

void run(const CfgProgram &program, std::uint64_t seed,
         const SimOptions &options, const EventSink &sink) {
  const auto n = program.block_count();
  Xoshiro256 rng(seed);
  std::vector<std::uint64_t> counter(n, 0);
  std::uint64_t emitted = 0;

  auto emit = [&](const TraceEvent &event) {
    if (emitted == options.event_cap)
      throw EventCapExceeded(options.event_cap);
    ++emitted;
    sink(event);
  };
  // Current iteration of a counted loop is counter-1; a recursion's current
  // depth is its counter.
  auto index = [&](BlockId header) -> std::int64_t {
    const auto c = static_cast<std::int64_t>(counter[header]);
    return std::holds_alternative<CountedLoop>(program.blocks[header].next)
               ? c - 1
               : c;
  };

  std::optional<BlockId> current = program.entry;
  while (current) {
    const BlockId b = *current;
    const auto &block = program.blocks[b];
    emit(TraceEvent::block_enter(b));
    if (options.addresses) {
      for (const auto &effect : block.memory) {
        std::uint64_t address = effect.base;
        for (const auto &term : effect.terms)
          address += static_cast<std::uint64_t>(term.stride * index(term.loop));
        emit(effect.is_store ? TraceEvent::store(address, effect.size)
                             : TraceEvent::load(address, effect.size));
      }
    }
    current = std::visit(
        Overloaded{
            [](const Halt &) -> std::optional<BlockId> { return std::nullopt; },
            [](const Jump &j) -> std::optional<BlockId> { return j.target; },
            [&](const CountedLoop &l) -> std::optional<BlockId> {
              if (counter[b] < l.bound) {
                ++counter[b];
                return l.body;
              }
              counter[b] = 0;
              return l.exit;
            },
            [&](const Branch &br) -> std::optional<BlockId> {
              const double u = rng.uniform();
              double acc = 0.0;
              for (const auto &arm : br.arms) {
                acc += arm.probability;
                if (u < acc)
                  return arm.target;
              }
              // Rounding left u above the cumulative sum; take the last arm
              // with nonzero probability.
              for (auto it = br.arms.rbegin(); it != br.arms.rend(); ++it)
                if (it->probability > 0.0)
                  return it->target;
              return br.arms.back().target;
            },
            [&](const Recursion &r) -> std::optional<BlockId> {
              if (++counter[b] < r.depth)
                return r.call;
              counter[b] = 0;
              return r.exit;
            },
        },
        block.next);
  }
}

Trace run(const CfgProgram &program, std::uint64_t seed,
          const SimOptions &options) {
  Trace trace;
  trace.block_count = program.block_count();
  run(program, seed, options,
      [&](const TraceEvent &e) { trace.events.push_back(e); });
  return trace;
}

// ---------------------------------------------------------------------------

ProgramBuilder::ProgramBuilder(std::string name) {
  program_.name = std::move(name);
}

BlockId ProgramBuilder::add(std::string name) {
  program_.blocks.push_back(CfgBlock{std::move(name), {}, Halt{}});
  return program_.block_count() - 1;
}

void ProgramBuilder::set_next(BlockId block, Successor next) {
  program_.blocks.at(block).next = std::move(next);
}

void ProgramBuilder::add_load(BlockId block, std::uint64_t base,
                              std::vector<AffineTerm> terms,
                              std::uint32_t size) {
  program_.blocks.at(block).memory.push_back(
      MemoryEffect{false, base, std::move(terms), size});
}

void ProgramBuilder::add_store(BlockId block, std::uint64_t base,
                               std::vector<AffineTerm> terms,
                               std::uint32_t size) {
  program_.blocks.at(block).memory.push_back(
      MemoryEffect{true, base, std::move(terms), size});
}

std::size_t ProgramBuilder::add_truth(std::string name,
                                      std::vector<BlockId> blocks,
                                      std::uint64_t iterations,
                                      std::optional<std::size_t> parent) {
  std::sort(blocks.begin(), blocks.end());
  blocks.erase(std::unique(blocks.begin(), blocks.end()), blocks.end());
  program_.truth.push_back(
      GroundTruthKernel{std::move(name), std::move(blocks), iterations, parent});
  return program_.truth.size() - 1;
}

CfgProgram ProgramBuilder::build(BlockId entry) && {
  program_.entry = entry;
  validate(program_);
  return std::move(program_);
}

// ---------------------------------------------------------------------------
// Random structured programs

namespace {

class RandomGenerator {
public:
  RandomGenerator(std::uint64_t seed, const RandomProgramOptions &options)
      : rng_(seed), opt_(options),
        builder_("random-" + std::to_string(seed)) {}

  CfgProgram generate() {
    // Cold prologue and epilogue around a random body.
    const BlockId prologue = builder_.add("prologue");
    const BlockId epilogue = builder_.add("epilogue");
    add_memory(epilogue);
    const BlockId body = sequence(0, epilogue, 1);
    builder_.set_next(prologue, Jump{body});
    return std::move(builder_).build(prologue);
  }

private:
  struct Scope {
    BlockId header;
    std::uint64_t trip;
  };

  // Emits a statement list that continues at `cont` and returns its entry.
  // Statements are built back to front so every successor already exists.
  BlockId sequence(std::uint32_t depth, BlockId cont, std::uint64_t reps) {
    const auto count = rng_.between(1, opt_.max_statements);
    BlockId next = cont;
    for (std::uint64_t i = 0; i < count; ++i)
      next = statement(depth, next, reps);
    return next;
  }

  BlockId statement(std::uint32_t depth, BlockId cont, std::uint64_t reps) {
    const double u = rng_.uniform();
    const bool can_nest = depth < opt_.max_depth;
    double acc = opt_.loop_weight;
    if (can_nest && u < acc)
      return loop(depth, cont, reps);
    acc += opt_.branch_weight;
    if (can_nest && u < acc)
      return branch(depth, cont, reps);
    acc += opt_.recursion_weight;
    if (can_nest && u < acc)
      return recursion(depth, cont, reps);
    const BlockId b = make("s");
    add_memory(b);
    builder_.set_next(b, Jump{cont});
    return b;
  }

  std::uint64_t trip(std::uint64_t reps) {
    // Keeps the total dynamic size of a nest bounded.
    constexpr std::uint64_t kBudget = 1 << 14;
    const std::uint64_t hi =
        std::max(opt_.min_trip, std::min(opt_.max_trip, kBudget / reps));
    return rng_.between(opt_.min_trip, hi);
  }

  BlockId loop(std::uint32_t depth, BlockId cont, std::uint64_t reps) {
    const std::uint64_t bound = trip(reps);
    const BlockId header = make("loop");
    open_scope(header, bound);
    const BlockId inc = make("inc");
    const BlockId body = sequence(depth + 1, inc, reps * bound);
    builder_.set_next(header, CountedLoop{body, cont, bound});
    builder_.set_next(inc, Jump{header});
    close_scope(reps * bound);
    return header;
  }

  BlockId recursion(std::uint32_t depth, BlockId cont, std::uint64_t reps) {
    const std::uint64_t d = trip(reps);
    const BlockId header = make("rec");
    open_scope(header, d);
    const BlockId call = make("call");
    const BlockId body = sequence(depth + 1, header, reps * d);
    builder_.set_next(header, Recursion{call, cont, d});
    builder_.set_next(call, Jump{body});
    close_scope(reps * d);
    return body;
  }

  BlockId branch(std::uint32_t depth, BlockId cont, std::uint64_t reps) {
    const BlockId cond = make("if");
    const BlockId join = make("join");
    builder_.set_next(join, Jump{cont});
    const double p = 0.1 + 0.8 * rng_.uniform();
    const BlockId then_entry = sequence(depth + 1, join, reps);
    const BlockId else_entry =
        rng_.uniform() < 0.5 ? join : sequence(depth + 1, join, reps);
    builder_.set_next(cond,
                      Branch{{{then_entry, p}, {else_entry, 1.0 - p}}});
    return cond;
  }

  BlockId make(const char *kind) {
    const BlockId b = builder_.add(kind + std::to_string(builder_.size()));
    for (auto &scope : members_)
      scope.push_back(b);
    return b;
  }

  void open_scope(BlockId header, std::uint64_t trip) {
    scopes_.push_back(Scope{header, trip});
    members_.push_back({header});
  }

  void close_scope(std::uint64_t iterations) {
    auto blocks = std::move(members_.back());
    members_.pop_back();
    scopes_.pop_back();
    std::sort(blocks.begin(), blocks.end());
    pending_.push_back({std::move(blocks), iterations});
    // Children close before parents, so parent links are resolved once the
    // outermost scope closes.
    if (scopes_.empty())
      flush_truth();
  }

  void flush_truth() {
    // pending_ is in post-order; a kernel's parent is the next pending entry
    // whose block set strictly contains it.
    std::vector<std::size_t> ids(pending_.size());
    for (std::size_t i = pending_.size(); i-- > 0;) {
      std::optional<std::size_t> parent;
      for (std::size_t j = i + 1; j < pending_.size(); ++j) {
        const auto &outer = pending_[j].blocks;
        const auto &inner = pending_[i].blocks;
        if (outer.size() > inner.size() &&
            std::includes(outer.begin(), outer.end(), inner.begin(),
                          inner.end())) {
          parent = ids[j];
          break;
        }
      }
      ids[i] = builder_.add_truth("k" + std::to_string(truth_count_++),
                                  pending_[i].blocks, pending_[i].iterations,
                                  parent);
    }
    pending_.clear();
  }

  void add_memory(BlockId b) {
    const auto effects = rng_.between(0, 2);
    for (std::uint64_t i = 0; i < effects; ++i) {
      const auto array = rng_.between(0, opt_.arrays - 1);
      const std::uint64_t base = 0x100000ULL * (array + 1);
      std::vector<AffineTerm> terms;
      std::int64_t stride = 8;
      for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
        terms.push_back({it->header, stride});
        stride *= static_cast<std::int64_t>(it->trip);
      }
      if (rng_.uniform() < 0.5)
        builder_.add_store(b, base, std::move(terms), 8);
      else
        builder_.add_load(b, base, std::move(terms), 8);
    }
  }

  struct Pending {
    std::vector<BlockId> blocks;
    std::uint64_t iterations;
  };

  Xoshiro256 rng_;
  RandomProgramOptions opt_;
  ProgramBuilder builder_;
  std::vector<Scope> scopes_;
  std::vector<std::vector<BlockId>> members_;
  std::vector<Pending> pending_;
  std::size_t truth_count_ = 0;
};

} // namespace

CfgProgram random_program(std::uint64_t seed,
                          const RandomProgramOptions &options) {
  if (options.max_statements == 0 || options.arrays == 0 ||
      options.min_trip == 0 || options.min_trip > options.max_trip)
    throw std::invalid_argument("invalid random program options");
  return RandomGenerator(seed, options).generate();
}

} // namespace katlas
