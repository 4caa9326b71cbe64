// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. `--write-golden` regenerates the golden traces.

#include "oracle.hpp"

#include "katlas/affinity.hpp"
#include "katlas/cfg_sim.hpp"
#include "katlas/codec.hpp"
#include "katlas/memdep.hpp"
#include "katlas/report.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace katlas;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(int n, const std::string &title, const std::function<Outcome()> &check) {
  Outcome o;
  try {
    o = check();
  } catch (const std::exception &e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass)
    ++failures;
  std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << n << ": " << title;
  if (!o.detail.empty())
    std::cout << " (" << o.detail << ")";
  std::cout << std::endl;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char *format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

std::string encode(const Trace &t, const CodecConfig &c) {
  std::ostringstream out;
  write_trace(t, c, out);
  return out.str();
}

Trace decode(const std::string &bytes) {
  std::istringstream in(bytes);
  return read_trace(in);
}

std::set<std::vector<BlockId>> kernel_sets(const std::vector<Kernel> &ks) {
  std::set<std::vector<BlockId>> s;
  for (const auto &k : ks)
    s.insert(k.blocks);
  return s;
}

std::set<std::vector<BlockId>> truth_sets(const CfgProgram &p) {
  std::set<std::vector<BlockId>> s;
  for (const auto &t : p.truth)
    s.insert(t.blocks);
  return s;
}

AnalysisResult analyze_canonical(const std::string &name, std::uint64_t seed = 42) {
  const auto &c = canonical_program(name);
  return analyze(run(c.program, seed), c.params);
}

constexpr std::uint64_t kCorpusSeed = 1000;

// Random programs with at most `limit` events, in seed order.
std::vector<Trace> random_corpus(std::size_t count, std::uint64_t limit,
                                 std::size_t *skipped = nullptr) {
  std::vector<Trace> corpus;
  for (std::uint64_t seed = kCorpusSeed; corpus.size() < count; ++seed) {
    try {
      corpus.push_back(run(random_program(seed), seed, SimOptions{true, limit}));
    } catch (const EventCapExceeded &) {
      if (skipped)
        ++*skipped;
    }
  }
  return corpus;
}

const std::vector<std::pair<std::string, CodecConfig>> kGolden = {
    {"pipeline2_s42_none.katlas", {4096, Compression::None, 6}},
    {"pipeline2_s42_deflate.katlas", {4096, Compression::Deflate, 6}},
};

Trace golden_trace() { return run(programs::pipeline2(), 42); }

std::string read_file(const std::filesystem::path &p) {
  std::ifstream in(p, std::ios::binary);
  if (!in)
    throw std::runtime_error("missing golden file " + p.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

} // namespace

int main(int argc, char **argv) {
  const std::filesystem::path golden_dir = KATLAS_GOLDEN_DIR;
  if (argc > 1 && std::string(argv[1]) == "--write-golden") {
    std::filesystem::create_directories(golden_dir);
    for (const auto &[name, config] : kGolden) {
      std::ofstream out(golden_dir / name, std::ios::binary);
      write_trace(golden_trace(), config, out);
    }
    std::cout << "golden files written to " << golden_dir << "\n";
    return 0;
  }

  report(1, "streaming affinity equals brute-force recount", [] {
    const auto t0 = std::chrono::steady_clock::now();
    std::size_t skipped = 0;
    const auto corpus = random_corpus(50, 10000, &skipped);
    std::size_t checks = 0;
    for (const auto &trace : corpus) {
      const auto seq = block_sequence(trace);
      for (std::size_t r : {1u, 2u, 4u, 7u, 8u}) {
        const auto why =
            oracle::compare(accumulate(trace, r), oracle::windowed_pair_counts(seq, r));
        if (!why.empty())
          return Outcome{false, why};
        ++checks;
      }
    }
    const double s = seconds_since(t0);
    return Outcome{s < 30.0, std::to_string(checks) + " program/radius pairs, " +
                                 std::to_string(skipped) +
                                 " oversized programs skipped, " + fmt("%.2f s", s)};
  });

  report(2, "affinity state size is independent of trace length", [] {
    const std::vector<std::pair<CfgProgram, CfgProgram>> pairs = {
        {programs::for_loop(511), programs::for_loop(5110)},
        {programs::nested_loop(64, 64), programs::nested_loop(640, 64)},
        {programs::rare_conditional(0.01, 10000), programs::rare_conditional(0.01, 100000)},
        {programs::pipeline2(20), programs::pipeline2(200)},
        {programs::fsm(64, 32), programs::fsm(640, 32)},
    };
    std::string detail;
    for (const auto &[small, big] : pairs) {
      const auto a_trace = run(small, 1);
      const auto b_trace = run(big, 1);
      for (std::size_t r : {1u, 7u}) {
        const auto a = accumulate(a_trace, r);
        const auto b = accumulate(b_trace, r);
        if (a.pair_cardinality() != b.pair_cardinality() ||
            a.occurrence_cardinality() != b.occurrence_cardinality() ||
            a.window_capacity() != b.window_capacity())
          return Outcome{false, small.name + " r=" + std::to_string(r) + ": " +
                                    std::to_string(a.pair_cardinality()) + " vs " +
                                    std::to_string(b.pair_cardinality()) + " pairs"};
      }
      detail += (detail.empty() ? "" : ", ") + small.name + " " +
                std::to_string(a_trace.events.size()) + "->" +
                std::to_string(b_trace.events.size()) + " events";
    }
    return Outcome{true, detail};
  });

  report(3, "codec round trip, truncation detection, golden stability", [&] {
    std::size_t round_trips = 0, cuts = 0;
    for (const auto &[program, params] : canonical_programs()) {
      const auto trace = run(program, 42);
      for (auto comp : {Compression::None, Compression::Deflate})
        for (std::size_t burst : {4096u, 65536u, 131072u}) {
          const auto bytes = encode(trace, {burst, comp, 6});
          if (!(decode(bytes) == trace))
            return Outcome{false, program.name + " does not round trip"};
          ++round_trips;
          if (encode(trace, {burst, comp, 6}) != bytes)
            return Outcome{false, program.name + " encoding is not deterministic"};
          // Cut points spread over the whole file, plus the last byte.
          const std::size_t step = std::max<std::size_t>(1, bytes.size() / 97);
          for (std::size_t cut = 0; cut < bytes.size(); cut += step) {
            try {
              (void)decode(bytes.substr(0, cut));
              return Outcome{false, program.name + " truncation at " +
                                        std::to_string(cut) + " undetected"};
            } catch (const CodecError &) {
              ++cuts;
            }
          }
          try {
            (void)decode(bytes.substr(0, bytes.size() - 1));
            return Outcome{false, program.name + " missing last byte undetected"};
          } catch (const CodecError &) {
            ++cuts;
          }
        }
    }
    for (const auto &[name, config] : kGolden)
      if (read_file(golden_dir / name) != encode(golden_trace(), config))
        return Outcome{false, "golden file " + name + " differs"};
    return Outcome{true, std::to_string(round_trips) + " round trips, " +
                             std::to_string(cuts) + " truncations detected, " +
                             std::to_string(kGolden.size()) + " golden files match"};
  });

  report(4, "encoded size against the naive dump", [] {
    bool ok = true;
    std::string detail;
    for (const auto &program : {programs::for_loop(5000), programs::nested_loop(64, 64),
                                programs::wide_kernel(2000, 5)}) {
      const auto trace = run(program, 1);
      const double naive = static_cast<double>(naive_dump(trace).size());
      const double deflate = encode(trace, {65536, Compression::Deflate, 6}).size();
      const double plain = encode(trace, {65536, Compression::None, 6}).size();
      const double naive4 = static_cast<double>(naive_dump(trace, 4).size());
      const bool pass = trace.events.size() >= 10000 && deflate * 10 <= naive &&
                        plain * 5 <= naive;
      ok = ok && pass;
      detail += (detail.empty() ? "" : "; ") + program.name + " " +
                std::to_string(trace.events.size()) + " events: deflate " +
                fmt("%.1f:1", naive / deflate) + ", uncompressed " +
                fmt("%.2f:1", naive / plain) + " (4-line dump " +
                fmt("%.2f:1", naive4 / plain) + ")";
    }
    return Outcome{ok, detail};
  });

  report(5, "canonical kernels equal ground truth", [] {
    for (const char *name : {"for_loop", "recursion", "pipeline2", "nested_loop"}) {
      const auto &c = canonical_program(name);
      const auto result = analyze_canonical(name);
      if (kernel_sets(result.kernels) != truth_sets(c.program))
        return Outcome{false, std::string(name) + " kernels differ from ground truth"};
    }
    const auto p2 = analyze_canonical("pipeline2").kernels;
    for (BlockId b : p2[0].blocks)
      if (p2[1].contains(b))
        return Outcome{false, "pipeline2 kernels overlap"};
    const auto nested = analyze_canonical("nested_loop").kernels;
    const auto &outer = nested[0].blocks.size() > nested[1].blocks.size() ? nested[0] : nested[1];
    const auto &inner = &outer == &nested[0] ? nested[1] : nested[0];
    if (inner.parents != std::vector<std::uint32_t>{outer.id})
      return Outcome{false, "nested_loop has no hierarchy link"};
    return Outcome{true, "for_loop 1, recursion 1, pipeline2 2 disjoint, nested inner<outer"};
  });

  report(6, "legalization adds the rare arm and fuses wide fragments", [] {
    const auto rare = analyze_canonical("rare_conditional");
    const BlockId arm = 6;
    for (const auto &c : rare.candidates)
      if (std::find(c.blocks.begin(), c.blocks.end(), arm) != c.blocks.end())
        return Outcome{false, "rare arm already in a raw candidate"};
    if (rare.kernels.size() != 1 || !rare.kernels[0].contains(arm))
      return Outcome{false, "rare arm missing after legalization"};
    const auto wide = analyze_canonical("wide_kernel");
    if (wide.candidates.size() < 2 || wide.kernels.size() != 1)
      return Outcome{false, std::to_string(wide.candidates.size()) + " candidates -> " +
                                std::to_string(wide.kernels.size()) + " kernels"};
    return Outcome{true, "rare arm added; wide " + std::to_string(wide.candidates.size()) +
                             " candidates -> 1 kernel"};
  });

  report(7, "coverage at least 0.999 on canonical programs", [] {
    bool ok = true;
    std::string detail;
    for (const auto &[program, params] : canonical_programs()) {
      const auto result = analyze(run(program, 42), params);
      ok = ok && result.coverage >= 0.999;
      detail += (detail.empty() ? "" : ", ") + program.name + " " +
                fmt("%.6f", result.coverage);
    }
    return Outcome{ok, detail};
  });

  report(8, "pipeline2 edge weight and re-verified dependencies", [] {
    std::size_t checked = 0;
    for (const auto &[program, params] : canonical_programs()) {
      const auto trace = run(program, 42);
      const auto kernels = analyze(trace, params).kernels;
      const auto instances = segment_instances(trace, kernels);
      const auto deps = extract_dependencies(trace, kernels, instances);
      const auto audit = oracle::audit(trace, kernels, instances, deps);
      if (audit.false_edges != 0)
        return Outcome{false, program.name + ": " + audit.first_problem};
      if (audit.completeness_checked && audit.missing != 0)
        return Outcome{false, program.name + ": " + std::to_string(audit.missing) +
                                  " dependencies missing"};
      checked += audit.checked;
      if (program.name == "pipeline2") {
        const auto g = build_pipeline(deps, instances, kernels);
        if (g.weight(0, 1) != 20 || g.weight(1, 0) != 0)
          return Outcome{false, "pipeline2 K0->K1 weight " + std::to_string(g.weight(0, 1)) +
                                    ", reverse " + std::to_string(g.weight(1, 0))};
      }
    }
    return Outcome{true, "K0->K1 weight 20, no reverse; " + std::to_string(checked) +
                             " dependencies re-verified, 0 false"};
  });

  {
    const auto corpus = random_corpus(40, 200000);
    const AnalysisParams base{};
    auto timed_sweep = [&](SweepParameter p, std::vector<double> grid, double &secs) {
      const auto t0 = std::chrono::steady_clock::now();
      auto rows = sweep(corpus, p, grid, base);
      secs = seconds_since(t0);
      return rows;
    };
    report(9, "parameter sweep shapes", [&] {
      double st = 0, sr = 0, sh = 0;
      const auto th_all = timed_sweep(SweepParameter::Threshold,
                                      default_grid(SweepParameter::Threshold), st);
      const auto rad_all = timed_sweep(SweepParameter::Radius,
                                       default_grid(SweepParameter::Radius), sr);
      // Rows 3 and 4 are 0.65 and 0.70; rows 0..3 are r = 1..4.
      const std::vector<SweepRow> th{th_all[3], th_all[4]};
      const std::vector<SweepRow> rad(rad_all.begin(), rad_all.begin() + 4);
      const auto hot = timed_sweep(SweepParameter::HotCount,
                                   default_grid(SweepParameter::HotCount), sh);
      const bool threshold_ok = th[1].mean_coverage > th[0].mean_coverage;
      bool radius_ok = true, hot_ok = true;
      for (std::size_t i = 1; i < rad.size(); ++i)
        radius_ok = radius_ok && rad[i].mean_kernels <= rad[i - 1].mean_kernels;
      for (std::size_t i = 1; i < hot.size(); ++i)
        hot_ok = hot_ok && hot[i].mean_coverage <= hot[i - 1].mean_coverage;
      const bool time_ok = st < 120 && sr < 120 && sh < 120;
      std::string detail = "threshold 0.65->0.7 coverage " +
                           fmt("%.4f", th[0].mean_coverage) + "->" +
                           fmt("%.4f", th[1].mean_coverage) +
                           (threshold_ok ? "" : " [not increasing]") + "; radius 1..4 kernels";
      for (const auto &r : rad)
        detail += " " + fmt("%.2f", r.mean_kernels);
      detail += radius_ok ? "" : " [increases]";
      detail += "; hot coverage";
      for (const auto &r : hot)
        detail += " " + fmt("%.3f", r.mean_coverage);
      detail += hot_ok ? "" : " [increases]";
      detail += "; " + std::to_string(corpus.size()) + " programs, " + fmt("%.1f", st) +
                "/" + fmt("%.1f", sr) + "/" + fmt("%.1f s", sh);
      return Outcome{threshold_ok && radius_ok && hot_ok && time_ok, detail};
    });
  }

  report(10, "fsm splits into controller and handler", [] {
    const auto &c = canonical_program("fsm");
    for (std::uint64_t seed : {1u, 7u, 42u, 99u}) {
      const auto result = analyze(run(c.program, seed), c.params);
      if (kernel_sets(result.kernels) != truth_sets(c.program))
        return Outcome{false, "seed " + std::to_string(seed) + ": " +
                                  std::to_string(result.kernels.size()) + " kernels"};
    }
    return Outcome{true, "2 kernels, handler nested in controller, seeds 1/7/42/99"};
  });

  return failures == 0 ? 0 : 1;
}
