#include "katlas/report.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace katlas {

std::string_view to_string(SweepParameter p) {
  switch (p) {
  case SweepParameter::Threshold:
    return "threshold";
  case SweepParameter::Radius:
    return "radius";
  case SweepParameter::HotCount:
    return "hot";
  }
  return "?";
}

SweepParameter parse_sweep_parameter(std::string_view text) {
  if (text == "threshold")
    return SweepParameter::Threshold;
  if (text == "radius")
    return SweepParameter::Radius;
  if (text == "hot")
    return SweepParameter::HotCount;
  throw std::invalid_argument("unknown sweep parameter '" + std::string(text) +
                              "' (threshold, radius, hot)");
}

std::vector<double> default_grid(SweepParameter parameter) {
  std::vector<double> out;
  switch (parameter) {
  case SweepParameter::Threshold:
    for (int i = 10; i <= 20; ++i)
      out.push_back(i / 20.0);
    break;
  case SweepParameter::Radius:
    for (int r = 1; r <= 10; ++r)
      out.push_back(r);
    break;
  case SweepParameter::HotCount:
    for (int h = 16; h <= 1024; h *= 2)
      out.push_back(h);
    break;
  }
  return out;
}

std::vector<SweepRow> sweep(std::span<const Trace> corpus,
                            SweepParameter parameter,
                            std::span<const double> values,
                            const AnalysisParams &base) {
  if (corpus.empty())
    throw std::invalid_argument("sweep needs at least one trace");
  if (values.empty())
    throw std::invalid_argument("sweep grid is empty");

  std::vector<SweepRow> rows;
  for (double v : values)
    rows.push_back({parameter, v, 0.0, 0.0});

  for (const auto &trace : corpus) {
    // The affinity matrix depends on the radius only.
    AffinityMatrix shared;
    if (parameter != SweepParameter::Radius)
      shared = compute_affinity(trace, base.radius);
    for (auto &row : rows) {
      AnalysisParams p = base;
      switch (parameter) {
      case SweepParameter::Threshold:
        p.threshold = row.value;
        break;
      case SweepParameter::Radius:
        if (row.value < 0)
          throw std::invalid_argument("negative radius in sweep grid");
        p.radius = static_cast<std::size_t>(std::llround(row.value));
        break;
      case SweepParameter::HotCount:
        if (row.value < 1)
          throw std::invalid_argument("hot count below 1 in sweep grid");
        p.hot_count = static_cast<std::uint64_t>(std::llround(row.value));
        break;
      }
      AffinityMatrix own;
      if (parameter == SweepParameter::Radius)
        own = compute_affinity(trace, p.radius);
      const AffinityMatrix &matrix =
          parameter == SweepParameter::Radius ? own : shared;
      const auto candidates =
          detect(matrix, DetectParams{p.threshold, p.hot_count});
      const auto kernels = legalize(trace, candidates).kernels;
      row.mean_kernels += static_cast<double>(kernels.size());
      row.mean_coverage += coverage(trace, kernels);
    }
  }
  const auto n = static_cast<double>(corpus.size());
  for (auto &row : rows) {
    row.mean_kernels /= n;
    row.mean_coverage /= n;
  }
  return rows;
}

std::string sweep_csv(std::span<const SweepRow> rows) {
  std::string out = "parameter,value,mean_kernels,mean_coverage\n";
  char buf[128];
  for (const auto &row : rows) {
    std::snprintf(buf, sizeof buf, "%s,%g,%.6f,%.6f\n",
                  std::string(to_string(row.parameter)).c_str(), row.value,
                  row.mean_kernels, row.mean_coverage);
    out += buf;
  }
  return out;
}

} // namespace katlas
