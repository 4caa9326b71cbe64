#pragma once

#include <cstddef>
#include <cstdint>

namespace katlas {

/// The three tuning knobs of kernel extraction. Defaults are the
/// recommended operating point: radius 7, threshold 0.95, hot code 512.
struct AnalysisParams {
  std::size_t radius = 7;
  double threshold = 0.95;
  std::uint64_t hot_count = 512;
};

} // namespace katlas
