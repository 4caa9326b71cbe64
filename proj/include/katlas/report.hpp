#pragma once

// End-to-end analysis and the machine-readable reports built on it.

#include "katlas/affinity.hpp"
#include "katlas/detect.hpp"
#include "katlas/legalize.hpp"
#include "katlas/params.hpp"

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace katlas {

struct AnalysisResult {
  AnalysisParams params;
  AffinityMatrix matrix;
  std::vector<KernelCandidate> candidates;
  std::vector<Kernel> kernels;
  std::vector<double> contributions; ///< per kernel, see coverage_contributions
  double coverage = 0.0;
  std::vector<std::string> diagnostics;
};

/// affinity -> detect -> legalize -> coverage.
AnalysisResult analyze(const Trace &trace, const AnalysisParams &params);

class ReportError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Kernel report ("format": "katlas-kernels", version 1).
std::string kernels_to_json(const AnalysisResult &result);
/// Reads the kernels back from a kernel report. Throws ReportError.
std::vector<Kernel> kernels_from_json(const std::string &text);

/// Raw candidates as [{seed, blocks, score}].
std::string candidates_to_json(const std::vector<KernelCandidate> &candidates);

enum class SweepParameter { Threshold, Radius, HotCount };

std::string_view to_string(SweepParameter p);
/// Accepts "threshold", "radius", "hot". Throws std::invalid_argument.
SweepParameter parse_sweep_parameter(std::string_view text);

struct SweepRow {
  SweepParameter parameter = SweepParameter::Threshold;
  double value = 0.0;
  double mean_kernels = 0.0;
  double mean_coverage = 0.0;
};

/// Varies one parameter over `values`, holding the others at `base`, and
/// averages kernel count and coverage over the corpus. Throws
/// std::invalid_argument for an empty corpus or grid.
std::vector<SweepRow> sweep(std::span<const Trace> corpus,
                            SweepParameter parameter,
                            std::span<const double> values,
                            const AnalysisParams &base = {});

/// threshold 0.50..1.00 step 0.05; radius 1..10; hot 16..1024 doubling.
std::vector<double> default_grid(SweepParameter parameter);

/// "parameter,value,mean_kernels,mean_coverage" with a header line.
std::string sweep_csv(std::span<const SweepRow> rows);

} // namespace katlas
