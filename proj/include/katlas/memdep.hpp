#pragma once

// Kernel instances and the store-to-load producer/consumer graph.

#include "katlas/legalize.hpp"
#include "katlas/trace.hpp"

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace katlas {

/// Kernel id of the pseudo-node standing for code outside every kernel.
inline constexpr std::uint32_t kBackgroundKernel =
    std::numeric_limits<std::uint32_t>::max();
/// Instance id of the background pseudo-instance.
inline constexpr std::uint64_t kBackgroundInstance =
    std::numeric_limits<std::uint64_t>::max();

struct KernelInstance {
  std::uint64_t id = 0;
  std::uint32_t kernel = 0;
  /// Inclusive event indices: from the run's first BlockEnter through the
  /// last event before the first BlockEnter outside the kernel.
  std::size_t start = 0;
  std::size_t end = 0;
  friend bool operator==(const KernelInstance &, const KernelInstance &) = default;
};

/// Per kernel, maximal contiguous runs of its blocks. Nested kernels give
/// overlapping instances. Ids follow (start ascending, end descending,
/// kernel ascending), so an enclosing instance precedes the ones inside it.
std::vector<KernelInstance> segment_instances(const Trace &trace,
                                              const std::vector<Kernel> &kernels);

struct Dependency {
  std::uint64_t producer = 0; ///< instance id or kBackgroundInstance
  std::uint64_t consumer = 0;
  std::uint64_t address = 0;  ///< the load's address
  std::size_t store_event = 0; ///< latest store feeding this load from producer
  std::size_t load_event = 0;
};

struct ExternalRead {
  std::uint64_t consumer = 0;
  std::uint64_t address = 0; ///< first never-written byte
  std::uint32_t bytes = 0;   ///< never-written bytes in this load
  std::size_t load_event = 0;
};

struct DependencyResult {
  /// One entry per load event per producing instance.
  std::vector<Dependency> dependencies;
  std::vector<ExternalRead> external_reads;
  /// Distinct bytes tracked by the last-writer map.
  std::size_t tracked_bytes = 0;
};

class UnsupportedOperation : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Memory events go to the innermost active instance (smallest kernel, ties
/// by lower kernel id), or the background pseudo-instance. Throws
/// UnsupportedOperation for a trace without memory events.
DependencyResult extract_dependencies(const Trace &trace,
                                      const std::vector<Kernel> &kernels,
                                      const std::vector<KernelInstance> &instances);

struct PipelineNode {
  std::uint32_t kernel = 0; ///< kernel id or kBackgroundKernel
  /// Index of the node's first event in the trace, for temporal ordering.
  std::size_t first_event = 0;
};

struct PipelineEdge {
  std::uint32_t producer = 0;
  std::uint32_t consumer = 0;
  std::uint64_t weight = 0;
  bool self_loop() const { return producer == consumer; }
};

struct PipelineGraph {
  std::vector<PipelineNode> nodes; ///< ascending kernel id, background last
  std::vector<PipelineEdge> edges; ///< ascending (producer, consumer)

  /// 0 when there is no such edge.
  std::uint64_t weight(std::uint32_t producer, std::uint32_t consumer) const;
};

/// Aggregates instance-level dependencies into kernel-level edges. With
/// `top_level`, nested kernels are folded into their outermost ancestor
/// (following the lowest-id parent) before aggregation. The background node
/// appears only if some edge touches it.
PipelineGraph build_pipeline(const DependencyResult &deps,
                             const std::vector<KernelInstance> &instances,
                             const std::vector<Kernel> &kernels,
                             bool top_level = false);

/// Graphviz rendering. With `temporal`, nodes are filled from red (earliest
/// first event) to green (latest).
std::string to_dot(const PipelineGraph &graph, bool temporal = true);
/// {"nodes":[...],"edges":[{"producer","consumer","weight","self_loop"}]};
/// the background node is spelled "background".
std::string to_json(const PipelineGraph &graph);

} // namespace katlas
