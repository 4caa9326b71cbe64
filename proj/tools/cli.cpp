#include "cli.hpp"

#include "katlas/cfg_sim.hpp"
#include "katlas/codec.hpp"
#include "katlas/memdep.hpp"
#include "katlas/report.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace katlas::cli {

namespace {

class InputError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw InputError("cannot open '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

void write_file(const std::string &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !out.write(text.data(), static_cast<std::streamsize>(text.size())))
    throw InputError("cannot write '" + path + "'");
}

struct LoadedTrace {
  Trace trace;
  bool addresses = false;
};

LoadedTrace load_trace(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw InputError("cannot open trace '" + path + "'");
  TraceReader reader(in);
  LoadedTrace loaded;
  loaded.addresses = reader.has_addresses();
  loaded.trace.block_count = reader.block_count();
  while (auto e = reader.next())
    loaded.trace.events.push_back(*e);
  return loaded;
}

std::vector<double> parse_grid(const std::string &text) {
  std::vector<double> values;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty())
      continue;
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception &) {
      used = 0;
    }
    if (used != item.size())
      throw InputError("bad grid value '" + item + "'");
    values.push_back(v);
  }
  return values;
}

struct Options {
  // simulate
  std::string program_file;
  std::string canonical_name;
  std::uint64_t seed = 1;
  std::string out_file;
  bool addresses = true;
  std::size_t burst_bytes = CodecConfig{}.burst_bytes;
  std::string compression = "deflate";
  int level = CodecConfig{}.deflate_level;
  std::uint64_t event_cap = SimOptions{}.event_cap;
  // analysis
  std::string trace_file;
  AnalysisParams params;
  std::string json_file;
  std::string csv_file;
  std::string candidates_file;
  // pipeline
  std::string kernels_file;
  std::string dot_file;
  bool top_level = false;
  bool no_color = false;
  // sweep
  std::string sweep_param;
  std::string grid;
  std::vector<std::string> traces;
  // canonical
  std::string name;
};

void add_analysis_flags(CLI::App *cmd, Options &o) {
  cmd->add_option("--radius", o.params.radius, "window half-width r")
      ->capture_default_str()
      ->check(CLI::Range(std::size_t{0}, std::size_t{1} << 20));
  cmd->add_option("--threshold", o.params.threshold, "set score threshold")
      ->capture_default_str();
  cmd->add_option("--hot", o.params.hot_count, "minimum seed executions")
      ->capture_default_str();
}

int cmd_simulate(const Options &o, std::ostream &out) {
  CfgProgram program;
  if (!o.program_file.empty())
    program = program_from_json(read_file(o.program_file));
  else
    program = canonical_program(o.canonical_name).program;

  CodecConfig config;
  config.burst_bytes = o.burst_bytes;
  config.compression = parse_compression(o.compression);
  config.deflate_level = o.level;
  config.validate();

  std::ofstream file(o.out_file, std::ios::binary);
  if (!file)
    throw InputError("cannot write '" + o.out_file + "'");
  WriteStats stats;
  try {
    TraceWriter writer(file, program.block_count(), o.addresses, config);
    run(program, o.seed, SimOptions{o.addresses, o.event_cap},
        [&](const TraceEvent &e) { writer.write(e); });
    stats = writer.finish();
  } catch (const EventCapExceeded &) {
    file.close();
    std::remove(o.out_file.c_str());
    throw;
  }
  out << "program: " << program.name << "\n"
      << "events: " << stats.events << "\n"
      << "text_bytes: " << stats.text_bytes << "\n"
      << "bytes_written: " << stats.bytes_written << "\n"
      << "flushes: " << stats.flush_count << "\n";
  return kOk;
}

int cmd_analyze(const Options &o, std::ostream &out, std::ostream &err) {
  DetectParams{o.params.threshold, o.params.hot_count}.validate();
  const auto loaded = load_trace(o.trace_file);
  const auto result = analyze(loaded.trace, o.params);
  for (const auto &d : result.diagnostics)
    err << "warning: " << d << "\n";
  if (!o.json_file.empty())
    write_file(o.json_file, kernels_to_json(result));
  if (!o.candidates_file.empty())
    write_file(o.candidates_file, candidates_to_json(result.candidates));
  if (!o.csv_file.empty()) {
    std::ostringstream csv;
    result.matrix.write_csv(csv);
    write_file(o.csv_file, csv.str());
  }
  out << "kernels: " << result.kernels.size() << "\n"
      << "candidates: " << result.candidates.size() << "\n"
      << "coverage: " << std::fixed << std::setprecision(6) << result.coverage
      << "\n";
  out.unsetf(std::ios::floatfield);
  for (const auto &k : result.kernels) {
    out << "K" << k.id << " seed=" << k.seed << " blocks=";
    for (std::size_t i = 0; i < k.blocks.size(); ++i)
      out << (i ? "," : "") << k.blocks[i];
    if (!k.parents.empty()) {
      out << " parents=";
      for (std::size_t i = 0; i < k.parents.size(); ++i)
        out << (i ? "," : "") << k.parents[i];
    }
    out << "\n";
  }
  return kOk;
}

int cmd_pipeline(const Options &o, std::ostream &out) {
  const auto kernels = kernels_from_json(read_file(o.kernels_file));
  const auto loaded = load_trace(o.trace_file);
  if (!loaded.addresses)
    throw UnsupportedOperation("trace '" + o.trace_file +
                               "' was recorded without addresses");
  const auto instances = segment_instances(loaded.trace, kernels);
  DependencyResult deps;
  if (loaded.trace.has_addresses())
    deps = extract_dependencies(loaded.trace, kernels, instances);
  const auto graph = build_pipeline(deps, instances, kernels, o.top_level);
  if (!o.dot_file.empty())
    write_file(o.dot_file, to_dot(graph, !o.no_color));
  if (!o.json_file.empty())
    write_file(o.json_file, to_json(graph));
  if (o.dot_file.empty() && o.json_file.empty())
    out << to_dot(graph, !o.no_color);
  return kOk;
}

int cmd_sweep(const Options &o, std::ostream &out) {
  const auto parameter = parse_sweep_parameter(o.sweep_param);
  const auto values = o.grid.empty() ? default_grid(parameter)
                                     : parse_grid(o.grid);
  if (values.empty())
    throw InputError("sweep grid is empty");
  std::vector<Trace> corpus;
  for (const auto &path : o.traces)
    corpus.push_back(load_trace(path).trace);
  const auto rows = sweep(corpus, parameter, values, o.params);
  const auto csv = sweep_csv(rows);
  if (o.csv_file.empty())
    out << csv;
  else
    write_file(o.csv_file, csv);
  return kOk;
}

void emit(const std::string &path, const std::string &text, std::ostream &out) {
  if (path.empty())
    out << text;
  else
    write_file(path, text);
}

} // namespace

int run(const std::vector<std::string> &args, std::ostream &out,
        std::ostream &err) {
  CLI::App app{"katlas: kernel detection and pipeline extraction from "
               "basic-block traces"};
  app.require_subcommand(1);
  Options o;

  auto *simulate = app.add_subcommand("simulate", "run a program into a trace");
  auto *source = simulate->add_option_group("source");
  source->add_option("--program", o.program_file, "program JSON file");
  source->add_option("--canonical", o.canonical_name, "built-in program name");
  source->require_option(1);
  simulate->add_option("--seed", o.seed, "branch PRNG seed")->capture_default_str();
  simulate->add_option("-o,--out", o.out_file, "trace file")->required();
  simulate->add_flag("--addresses,!--no-addresses", o.addresses,
                     "record load/store addresses (default on)");
  simulate->add_option("--burst-bytes", o.burst_bytes, "encoder burst buffer")
      ->capture_default_str();
  simulate->add_option("--compression", o.compression, "none or deflate")
      ->capture_default_str();
  simulate->add_option("--level", o.level, "deflate level 1-9")
      ->capture_default_str();
  simulate->add_option("--event-cap", o.event_cap, "abort after this many events")
      ->capture_default_str();

  auto *analyze_cmd = app.add_subcommand("analyze", "detect kernels in a trace");
  analyze_cmd->add_option("trace", o.trace_file, "trace file")->required();
  add_analysis_flags(analyze_cmd, o);
  analyze_cmd->add_option("--json", o.json_file, "write kernel report");
  analyze_cmd->add_option("--csv", o.csv_file, "write affinity matrix");
  analyze_cmd->add_option("--candidates", o.candidates_file,
                          "write raw candidates");

  auto *pipeline = app.add_subcommand("pipeline", "producer/consumer graph");
  pipeline->add_option("trace", o.trace_file, "trace file")->required();
  pipeline->add_option("--kernels", o.kernels_file, "kernel report")->required();
  pipeline->add_option("--dot", o.dot_file, "write Graphviz graph");
  pipeline->add_option("--json", o.json_file, "write JSON edge list");
  pipeline->add_flag("--top-level", o.top_level, "fold nested kernels upward");
  pipeline->add_flag("--no-color", o.no_color, "no temporal node colouring");

  auto *sweep_cmd = app.add_subcommand("sweep", "parameter sweep over traces");
  sweep_cmd->add_option("--param", o.sweep_param, "threshold, radius or hot")
      ->required();
  sweep_cmd->add_option("--values", o.grid, "comma-separated grid");
  add_analysis_flags(sweep_cmd, o);
  sweep_cmd->add_option("--csv", o.csv_file, "write table");
  sweep_cmd->add_option("traces", o.traces, "trace files")->required();

  auto *canonical = app.add_subcommand("canonical", "built-in programs");
  canonical->require_subcommand(1);
  auto *list = canonical->add_subcommand("list", "names and parameters");
  auto *emit_cmd = canonical->add_subcommand("emit", "write program JSON");
  emit_cmd->add_option("name", o.name, "program name")->required();
  emit_cmd->add_option("-o,--out", o.out_file, "output file (default stdout)");

  auto *random = app.add_subcommand("random", "random structured program JSON");
  random->add_option("--seed", o.seed, "generator seed")->capture_default_str();
  random->add_option("-o,--out", o.out_file, "output file (default stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (simulate->parsed())
      return cmd_simulate(o, out);
    if (analyze_cmd->parsed())
      return cmd_analyze(o, out, err);
    if (pipeline->parsed())
      return cmd_pipeline(o, out);
    if (sweep_cmd->parsed())
      return cmd_sweep(o, out);
    if (list->parsed()) {
      for (const auto &c : canonical_programs())
        out << c.program.name << " radius=" << c.params.radius
            << " threshold=" << c.params.threshold
            << " hot=" << c.params.hot_count << "\n";
      return kOk;
    }
    if (emit_cmd->parsed()) {
      emit(o.out_file, to_json(canonical_program(o.name).program), out);
      return kOk;
    }
    if (random->parsed()) {
      emit(o.out_file, to_json(random_program(o.seed)), out);
      return kOk;
    }
  } catch (const EventCapExceeded &e) {
    err << "error: " << e.what() << "\n";
    return kResourceCap;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }
  return kInputError;
}

} // namespace katlas::cli
