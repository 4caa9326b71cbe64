#include "katlas/memdep.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <unordered_map>

namespace katlas {

std::vector<KernelInstance>
segment_instances(const Trace &trace, const std::vector<Kernel> &kernels) {
  std::vector<KernelInstance> out;
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> open(kernels.size(), kNone);

  for (std::size_t i = 0; i < trace.events.size(); ++i) {
    const auto &event = trace.events[i];
    if (!event.is_block())
      continue;
    for (std::size_t k = 0; k < kernels.size(); ++k) {
      const bool inside = kernels[k].contains(event.block());
      if (inside && open[k] == kNone) {
        open[k] = i;
      } else if (!inside && open[k] != kNone) {
        out.push_back({0, kernels[k].id, open[k], i - 1});
        open[k] = kNone;
      }
    }
  }
  for (std::size_t k = 0; k < kernels.size(); ++k)
    if (open[k] != kNone)
      out.push_back({0, kernels[k].id, open[k], trace.events.size() - 1});

  std::sort(out.begin(), out.end(), [](const auto &a, const auto &b) {
    if (a.start != b.start)
      return a.start < b.start;
    if (a.end != b.end)
      return a.end > b.end;
    return a.kernel < b.kernel;
  });
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i].id = i;
  return out;
}

DependencyResult
extract_dependencies(const Trace &trace, const std::vector<Kernel> &kernels,
                     const std::vector<KernelInstance> &instances) {
  if (!trace.has_addresses())
    throw UnsupportedOperation(
        "dependency extraction needs a trace recorded with addresses");

  std::unordered_map<std::uint32_t, std::size_t> size_of;
  for (const auto &k : kernels)
    size_of[k.id] = k.blocks.size();
  auto inner = [&](const KernelInstance *a, const KernelInstance *b) {
    const auto sa = size_of.at(a->kernel);
    const auto sb = size_of.at(b->kernel);
    return sa != sb ? sa < sb : a->kernel < b->kernel;
  };

  std::vector<const KernelInstance *> by_start;
  for (const auto &inst : instances)
    by_start.push_back(&inst);
  std::sort(by_start.begin(), by_start.end(),
            [](auto *a, auto *b) { return a->start < b->start; });

  struct Writer {
    std::uint64_t instance;
    std::size_t event;
  };
  std::unordered_map<std::uint64_t, Writer> last_writer;
  DependencyResult result;

  std::vector<const KernelInstance *> active;
  std::size_t next = 0;
  std::uint64_t current = kBackgroundInstance;
  for (std::size_t i = 0; i < trace.events.size(); ++i) {
    bool changed = false;
    const auto before = active.size();
    std::erase_if(active, [&](auto *inst) { return inst->end < i; });
    changed |= active.size() != before;
    while (next < by_start.size() && by_start[next]->start <= i) {
      if (by_start[next]->end >= i)
        active.push_back(by_start[next]);
      ++next;
      changed = true;
    }
    if (changed) {
      const auto it = std::min_element(active.begin(), active.end(), inner);
      current = it == active.end() ? kBackgroundInstance : (*it)->id;
    }

    const auto &event = trace.events[i];
    if (event.is_block())
      continue;
    const Address a = event.address();
    if (event.kind() == EventKind::Store) {
      for (std::uint64_t byte = a.value; byte < a.end(); ++byte)
        last_writer[byte] = Writer{current, i};
      continue;
    }
    // Load: one dependency per distinct producer, witnessed by its latest
    // store among the bytes read.
    std::map<std::uint64_t, std::size_t> producers;
    ExternalRead external{current, 0, 0, i};
    for (std::uint64_t byte = a.value; byte < a.end(); ++byte) {
      const auto it = last_writer.find(byte);
      if (it == last_writer.end()) {
        if (external.bytes++ == 0)
          external.address = byte;
        continue;
      }
      auto &witness = producers[it->second.instance];
      witness = std::max(witness, it->second.event);
    }
    for (const auto &[producer, store_event] : producers)
      result.dependencies.push_back(
          Dependency{producer, current, a.value, store_event, i});
    if (external.bytes > 0)
      result.external_reads.push_back(external);
  }
  result.tracked_bytes = last_writer.size();
  return result;
}

std::uint64_t PipelineGraph::weight(std::uint32_t producer,
                                    std::uint32_t consumer) const {
  for (const auto &e : edges)
    if (e.producer == producer && e.consumer == consumer)
      return e.weight;
  return 0;
}

PipelineGraph build_pipeline(const DependencyResult &deps,
                             const std::vector<KernelInstance> &instances,
                             const std::vector<Kernel> &kernels,
                             bool top_level) {
  std::unordered_map<std::uint32_t, const Kernel *> by_id;
  for (const auto &k : kernels)
    by_id[k.id] = &k;
  auto fold = [&](std::uint32_t kernel) {
    if (!top_level || kernel == kBackgroundKernel)
      return kernel;
    for (std::size_t guard = 0; guard <= kernels.size(); ++guard) {
      const Kernel *k = by_id.at(kernel);
      if (k->parents.empty())
        return kernel;
      kernel = k->parents.front();
    }
    throw std::logic_error("kernel hierarchy contains a cycle");
  };

  std::unordered_map<std::uint64_t, const KernelInstance *> instance;
  for (const auto &inst : instances)
    instance[inst.id] = &inst;
  auto kernel_of = [&](std::uint64_t id) {
    return id == kBackgroundInstance ? kBackgroundKernel
                                     : fold(instance.at(id)->kernel);
  };

  std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint64_t> weights;
  std::optional<std::size_t> background_first;
  for (const auto &d : deps.dependencies) {
    const auto p = kernel_of(d.producer);
    const auto c = kernel_of(d.consumer);
    ++weights[{p, c}];
    if (p == kBackgroundKernel || c == kBackgroundKernel) {
      const auto at = p == kBackgroundKernel ? d.store_event : d.load_event;
      background_first = std::min(background_first.value_or(at), at);
    }
  }

  PipelineGraph graph;
  std::map<std::uint32_t, std::size_t> first;
  for (const auto &k : kernels)
    if (fold(k.id) == k.id)
      first[k.id] = std::numeric_limits<std::size_t>::max();
  for (const auto &inst : instances) {
    auto &at = first[fold(inst.kernel)];
    at = std::min(at, inst.start);
  }
  for (const auto &[kernel, at] : first)
    graph.nodes.push_back({kernel, at});
  if (background_first)
    graph.nodes.push_back({kBackgroundKernel, *background_first});
  for (const auto &[key, w] : weights)
    graph.edges.push_back({key.first, key.second, w});
  return graph;
}

namespace {

std::string node_name(std::uint32_t kernel) {
  return kernel == kBackgroundKernel ? "background"
                                     : "k" + std::to_string(kernel);
}

std::string color(double t) {
  char buf[8];
  const int red = static_cast<int>(255.0 * (1.0 - t) + 0.5);
  const int green = static_cast<int>(255.0 * t + 0.5);
  std::snprintf(buf, sizeof buf, "#%02x%02x00", red, green);
  return buf;
}

} // namespace

std::string to_dot(const PipelineGraph &graph, bool temporal) {
  std::vector<std::size_t> order(graph.nodes.size());
  for (std::size_t i = 0; i < order.size(); ++i)
    order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
    return graph.nodes[a].first_event < graph.nodes[b].first_event;
  });
  std::vector<std::size_t> rank(order.size());
  for (std::size_t r = 0; r < order.size(); ++r)
    rank[order[r]] = r;

  std::ostringstream out;
  out << "digraph pipeline {\n  rankdir=LR;\n"
      << "  node [shape=box" << (temporal ? ", style=filled" : "") << "];\n";
  for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
    const auto &node = graph.nodes[i];
    out << "  " << node_name(node.kernel) << " [label=\""
        << (node.kernel == kBackgroundKernel
                ? std::string("background")
                : "K" + std::to_string(node.kernel))
        << '"';
    if (temporal) {
      const double t = graph.nodes.size() > 1
                           ? static_cast<double>(rank[i]) /
                                 static_cast<double>(graph.nodes.size() - 1)
                           : 0.0;
      out << ", fillcolor=\"" << color(t) << '"';
    }
    out << "];\n";
  }
  for (const auto &e : graph.edges) {
    out << "  " << node_name(e.producer) << " -> " << node_name(e.consumer)
        << " [label=\"" << e.weight << '"';
    if (e.self_loop())
      out << ", style=dashed";
    out << "];\n";
  }
  out << "}\n";
  return out.str();
}

std::string to_json(const PipelineGraph &graph) {
  using nlohmann::json;
  auto id = [](std::uint32_t kernel) {
    return kernel == kBackgroundKernel ? json("background") : json(kernel);
  };
  json doc;
  doc["nodes"] = json::array();
  for (const auto &n : graph.nodes)
    doc["nodes"].push_back({{"kernel", id(n.kernel)},
                            {"first_event", n.first_event}});
  doc["edges"] = json::array();
  for (const auto &e : graph.edges)
    doc["edges"].push_back({{"producer", id(e.producer)},
                            {"consumer", id(e.consumer)},
                            {"weight", e.weight},
                            {"self_loop", e.self_loop()}});
  return doc.dump(2) + "\n";
}

} // namespace katlas
