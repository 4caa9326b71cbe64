#include "katlas/cfg_sim.hpp"

#include <stdexcept>

namespace katlas::programs {

namespace {
constexpr std::uint64_t kArrayA = 0x10000;
constexpr std::uint64_t kArrayB = 0x20000;
constexpr std::uint64_t kArrayC = 0x30000;
constexpr std::uint64_t kScalars = 0x40000;
} // namespace

CfgProgram for_loop(std::uint64_t n) {
  ProgramBuilder p("for_loop");
  const auto init = p.add("init");
  const auto cond = p.add("cond");
  const auto body = p.add("body");
  const auto inc = p.add("inc");
  p.set_next(init, Jump{cond});
  p.set_next(cond, CountedLoop{body, std::nullopt, n});
  p.set_next(body, Jump{inc});
  p.set_next(inc, Jump{cond});
  // b[i] = a[i] + a[i + 1]
  p.add_load(body, kArrayA, {{cond, 4}}, 4);
  p.add_load(body, kArrayA + 4, {{cond, 4}}, 4);
  p.add_store(body, kArrayB, {{cond, 4}}, 4);
  p.add_truth("loop", {cond, body, inc}, n);
  return std::move(p).build(init);
}

CfgProgram recursion(std::uint64_t depth) {
  ProgramBuilder p("recursion");
  const auto init = p.add("init");
  const auto body = p.add("body");
  const auto cond = p.add("cond");
  const auto call = p.add("call");
  p.set_next(init, Jump{body});
  p.set_next(body, Jump{cond});
  p.set_next(cond, Recursion{call, std::nullopt, depth});
  p.set_next(call, Jump{body});
  p.add_load(body, kArrayA, {{cond, 4}}, 4);
  p.add_store(body, kArrayB, {{cond, 4}}, 4);
  p.add_truth("recursion", {body, cond, call}, depth);
  return std::move(p).build(init);
}

CfgProgram nested_loop(std::uint64_t outer, std::uint64_t inner) {
  ProgramBuilder p("nested_loop");
  const auto init = p.add("init");
  const auto ocond = p.add("outer_cond");
  const auto obody = p.add("outer_body");
  const auto icond = p.add("inner_cond");
  const auto ibody = p.add("inner_body");
  const auto iinc = p.add("inner_inc");
  const auto oinc = p.add("outer_inc");
  p.set_next(init, Jump{ocond});
  p.set_next(ocond, CountedLoop{obody, std::nullopt, outer});
  p.set_next(obody, Jump{icond});
  p.set_next(icond, CountedLoop{ibody, oinc, inner});
  p.set_next(ibody, Jump{iinc});
  p.set_next(iinc, Jump{icond});
  p.set_next(oinc, Jump{ocond});
  // acc[i] = 0; acc[i] += a[i][j]
  const auto row = static_cast<std::int64_t>(4 * inner);
  p.add_store(obody, kArrayB, {{ocond, 8}}, 8);
  p.add_load(ibody, kArrayA, {{ocond, row}, {icond, 4}}, 4);
  p.add_load(ibody, kArrayB, {{ocond, 8}}, 8);
  p.add_store(ibody, kArrayB, {{ocond, 8}}, 8);
  const auto o = p.add_truth("outer", {ocond, obody, icond, ibody, iinc, oinc},
                             outer);
  p.add_truth("inner", {icond, ibody, iinc}, outer * inner, o);
  return std::move(p).build(init);
}

CfgProgram rare_conditional(double prob, std::uint64_t n,
                            std::uint32_t arm_blocks) {
  if (arm_blocks == 0)
    throw std::invalid_argument("rare arm needs at least one block");
  ProgramBuilder p("rare_conditional");
  const auto init = p.add("init");
  const auto cond = p.add("cond");
  const auto body = p.add("body");
  const auto check = p.add("check");
  const auto common = p.add("common");
  const auto inc = p.add("inc");
  std::vector<BlockId> arm;
  for (std::uint32_t k = 0; k < arm_blocks; ++k)
    arm.push_back(p.add("rare" + std::to_string(k)));
  p.set_next(init, Jump{cond});
  p.set_next(cond, CountedLoop{body, std::nullopt, n});
  p.set_next(body, Jump{check});
  p.set_next(check, Branch{{{common, 1.0 - prob}, {arm.front(), prob}}});
  p.set_next(common, Jump{inc});
  for (std::size_t k = 0; k + 1 < arm.size(); ++k)
    p.set_next(arm[k], Jump{arm[k + 1]});
  p.set_next(arm.back(), Jump{inc});
  p.set_next(inc, Jump{cond});
  p.add_load(body, kArrayA, {{cond, 4}}, 4);
  p.add_store(common, kArrayB, {{cond, 4}}, 4);
  p.add_store(arm.back(), kArrayC, {{cond, 4}}, 4);
  std::vector<BlockId> blocks{cond, body, check, common, inc};
  blocks.insert(blocks.end(), arm.begin(), arm.end());
  p.add_truth("loop", std::move(blocks), n);
  return std::move(p).build(init);
}

CfgProgram wide_kernel(std::uint64_t n, std::uint32_t width) {
  if (width == 0)
    throw std::invalid_argument("wide kernel needs at least one body block");
  ProgramBuilder p("wide_kernel");
  const auto init = p.add("init");
  const auto cond = p.add("cond");
  std::vector<BlockId> chain;
  for (std::uint32_t k = 0; k < width; ++k)
    chain.push_back(p.add("stage" + std::to_string(k)));
  const auto inc = p.add("inc");
  p.set_next(init, Jump{cond});
  p.set_next(cond, CountedLoop{chain.front(), std::nullopt, n});
  for (std::size_t k = 0; k + 1 < chain.size(); ++k)
    p.set_next(chain[k], Jump{chain[k + 1]});
  p.set_next(chain.back(), Jump{inc});
  p.set_next(inc, Jump{cond});
  // Each stage reads the previous stage's temporary and writes its own.
  for (std::size_t k = 0; k < chain.size(); ++k) {
    if (k > 0)
      p.add_load(chain[k], kArrayC + 8 * (k - 1), {}, 8);
    p.add_store(chain[k], kArrayC + 8 * k, {}, 8);
  }
  std::vector<BlockId> blocks{cond, inc};
  blocks.insert(blocks.end(), chain.begin(), chain.end());
  p.add_truth("loop", std::move(blocks), n);
  return std::move(p).build(init);
}

CfgProgram pipeline2(std::uint64_t n) {
  ProgramBuilder p("pipeline2");
  // Producer: a counted loop filling buf[0..n).
  const auto b = p.add("produce_cond");
  const auto c = p.add("produce_body");
  const auto d = p.add("produce_inc");
  // Consumer: a depth-n recursion reading buf[depth].
  const auto f = p.add("consume_body");
  const auto g = p.add("consume_cond");
  const auto h = p.add("consume_call");
  p.set_next(b, CountedLoop{c, f, n});
  p.set_next(c, Jump{d});
  p.set_next(d, Jump{b});
  p.set_next(f, Jump{g});
  p.set_next(g, Recursion{h, std::nullopt, n});
  p.set_next(h, Jump{f});
  p.add_store(c, kArrayA, {{b, 8}}, 8);
  p.add_load(f, kArrayA, {{g, 8}}, 8);
  p.add_truth("producer", {b, c, d}, n);
  p.add_truth("consumer", {f, g, h}, n);
  return std::move(p).build(b);
}

CfgProgram fsm(std::uint64_t steps, std::uint64_t handler) {
  ProgramBuilder p("fsm");
  const auto init = p.add("init");
  const auto ccond = p.add("control_cond");
  const auto dispatch = p.add("dispatch");
  const auto hcond = p.add("handler_cond");
  const auto hbody = p.add("handler_body");
  const auto hinc = p.add("handler_inc");
  const auto decide = p.add("decide");
  const auto s0 = p.add("to_state0");
  const auto s1 = p.add("to_state1");
  p.set_next(init, Jump{ccond});
  p.set_next(ccond, CountedLoop{dispatch, std::nullopt, steps});
  p.set_next(dispatch, Jump{hcond});
  p.set_next(hcond, CountedLoop{hbody, decide, handler});
  p.set_next(hbody, Jump{hinc});
  p.set_next(hinc, Jump{hcond});
  p.set_next(decide, Branch{{{s0, 0.5}, {s1, 0.5}}});
  p.set_next(s0, Jump{ccond});
  p.set_next(s1, Jump{ccond});
  const std::uint64_t state = kScalars;
  const std::uint64_t result = kScalars + 8;
  p.add_store(init, state, {}, 8);
  p.add_load(dispatch, state, {}, 8);
  p.add_load(dispatch, result, {}, 8);
  p.add_load(hbody, state, {}, 8);
  p.add_load(hbody, kArrayA, {{hcond, 8}}, 8);
  p.add_store(hbody, kArrayA, {{hcond, 8}}, 8);
  p.add_load(decide, kArrayA + 8 * (handler > 0 ? handler - 1 : 0), {}, 8);
  p.add_store(decide, result, {}, 8);
  p.add_store(s0, state, {}, 8);
  p.add_store(s1, state, {}, 8);
  const auto controller = p.add_truth(
      "controller", {ccond, dispatch, hcond, hbody, hinc, decide, s0, s1},
      steps);
  p.add_truth("handler", {hcond, hbody, hinc}, steps * handler, controller);
  return std::move(p).build(init);
}

} // namespace katlas::programs

namespace katlas {

std::vector<CanonicalProgram> canonical_programs() {
  using namespace programs;
  return {
      {for_loop(), {7, 0.95, 256}},
      {recursion(), {7, 0.95, 256}},
      {nested_loop(), {7, 0.95, 64}},
      {rare_conditional(), {7, 0.95, 512}},
      {wide_kernel(), {1, 0.65, 256}},
      {pipeline2(), {2, 0.9, 16}},
      {fsm(), {7, 0.95, 64}},
  };
}

CanonicalProgram canonical_program(const std::string &name) {
  for (auto &entry : canonical_programs())
    if (entry.program.name == name)
      return entry;
  throw std::out_of_range("unknown canonical program '" + name + "'");
}

} // namespace katlas
