#include "katlas/report.hpp"

#include <json.hpp>

#include <algorithm>

namespace katlas {

using nlohmann::json;

AnalysisResult analyze(const Trace &trace, const AnalysisParams &params) {
  AnalysisResult r;
  r.params = params;
  r.matrix = compute_affinity(trace, params.radius);
  r.candidates = detect(r.matrix, DetectParams{params.threshold, params.hot_count});
  auto legal = legalize(trace, r.candidates);
  r.kernels = std::move(legal.kernels);
  r.diagnostics = std::move(legal.diagnostics);
  r.contributions = coverage_contributions(trace, r.kernels);
  r.coverage = coverage(trace, r.kernels);
  return r;
}

std::string kernels_to_json(const AnalysisResult &result) {
  json doc;
  doc["format"] = "katlas-kernels";
  doc["version"] = 1;
  doc["params"] = {{"radius", result.params.radius},
                   {"threshold", result.params.threshold},
                   {"hot_count", result.params.hot_count}};
  doc["kernel_count"] = result.kernels.size();
  doc["coverage"] = result.coverage;
  doc["kernels"] = json::array();
  for (std::size_t i = 0; i < result.kernels.size(); ++i) {
    const auto &k = result.kernels[i];
    doc["kernels"].push_back(
        {{"id", k.id},
         {"blocks", k.blocks},
         {"parents", k.parents},
         {"children", k.children},
         {"seed", k.seed},
         {"coverage_contribution",
          i < result.contributions.size() ? result.contributions[i] : 0.0}});
  }
  return doc.dump(2) + "\n";
}

std::vector<Kernel> kernels_from_json(const std::string &text) {
  try {
    const auto doc = json::parse(text);
    if (doc.value("format", "") != "katlas-kernels")
      throw ReportError("not a katlas-kernels document");
    if (doc.value("version", 0) != 1)
      throw ReportError("unsupported kernel report version");
    std::vector<Kernel> kernels;
    for (const auto &k : doc.at("kernels")) {
      Kernel kernel;
      kernel.id = k.at("id").get<std::uint32_t>();
      kernel.blocks = k.at("blocks").get<std::vector<BlockId>>();
      kernel.parents = k.value("parents", std::vector<std::uint32_t>{});
      kernel.children = k.value("children", std::vector<std::uint32_t>{});
      kernel.seed = k.value("seed", BlockId{0});
      if (!std::is_sorted(kernel.blocks.begin(), kernel.blocks.end()))
        throw ReportError("kernel " + std::to_string(kernel.id) +
                          " blocks are not sorted");
      kernels.push_back(std::move(kernel));
    }
    for (std::size_t i = 0; i < kernels.size(); ++i)
      if (kernels[i].id != i)
        throw ReportError("kernel ids must be 0..n-1 in order");
    return kernels;
  } catch (const json::exception &e) {
    throw ReportError(std::string("kernel report: ") + e.what());
  }
}

std::string candidates_to_json(const std::vector<KernelCandidate> &candidates) {
  json doc = json::array();
  for (const auto &c : candidates)
    doc.push_back({{"seed", c.seed}, {"blocks", c.blocks}, {"score", c.score}});
  return doc.dump(2) + "\n";
}

} // namespace katlas
