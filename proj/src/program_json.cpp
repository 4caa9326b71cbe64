#include "katlas/cfg_sim.hpp"

#include <json.hpp>

#include <cstdio>

namespace katlas {

using nlohmann::json;

namespace {

constexpr const char *kFormat = "katlas-program";
constexpr int kVersion = 1;

std::string hex(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "0x%llx", static_cast<unsigned long long>(v));
  return buf;
}

json successor_json(const Successor &next) {
  json j;
  if (std::holds_alternative<Halt>(next)) {
    j["kind"] = "halt";
  } else if (const auto *jump = std::get_if<Jump>(&next)) {
    j["kind"] = "jump";
    j["target"] = jump->target;
  } else if (const auto *l = std::get_if<CountedLoop>(&next)) {
    j["kind"] = "loop";
    j["body"] = l->body;
    j["exit"] = l->exit ? json(*l->exit) : json(nullptr);
    j["bound"] = l->bound;
  } else if (const auto *b = std::get_if<Branch>(&next)) {
    j["kind"] = "branch";
    j["arms"] = json::array();
    for (const auto &arm : b->arms)
      j["arms"].push_back({{"target", arm.target}, {"p", arm.probability}});
  } else if (const auto *r = std::get_if<Recursion>(&next)) {
    j["kind"] = "recursion";
    j["call"] = r->call;
    j["exit"] = r->exit ? json(*r->exit) : json(nullptr);
    j["depth"] = r->depth;
  }
  return j;
}

std::optional<BlockId> optional_block(const json &j) {
  if (j.is_null())
    return std::nullopt;
  return j.get<BlockId>();
}

Successor successor_from(const json &j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "halt")
    return Halt{};
  if (kind == "jump")
    return Jump{j.at("target").get<BlockId>()};
  if (kind == "loop")
    return CountedLoop{j.at("body").get<BlockId>(),
                       optional_block(j.value("exit", json(nullptr))),
                       j.at("bound").get<std::uint64_t>()};
  if (kind == "branch") {
    Branch b;
    for (const auto &arm : j.at("arms"))
      b.arms.push_back({arm.at("target").get<BlockId>(),
                        arm.at("p").get<double>()});
    return b;
  }
  if (kind == "recursion")
    return Recursion{j.at("call").get<BlockId>(),
                     optional_block(j.value("exit", json(nullptr))),
                     j.at("depth").get<std::uint64_t>()};
  throw ProgramError("unknown successor kind '" + kind + "'");
}

std::uint64_t address_from(const json &j) {
  if (j.is_number_unsigned())
    return j.get<std::uint64_t>();
  const auto text = j.get<std::string>();
  std::size_t used = 0;
  const auto value = std::stoull(text, &used, 0);
  if (used != text.size())
    throw ProgramError("bad address '" + text + "'");
  return value;
}

} // namespace

std::string to_json(const CfgProgram &program) {
  json doc;
  doc["format"] = kFormat;
  doc["version"] = kVersion;
  doc["name"] = program.name;
  doc["entry"] = program.entry;
  doc["blocks"] = json::array();
  for (const auto &block : program.blocks) {
    json b;
    b["name"] = block.name;
    b["memory"] = json::array();
    for (const auto &m : block.memory) {
      json terms = json::array();
      for (const auto &t : m.terms)
        terms.push_back({{"loop", t.loop}, {"stride", t.stride}});
      b["memory"].push_back({{"op", m.is_store ? "store" : "load"},
                             {"base", hex(m.base)},
                             {"size", m.size},
                             {"terms", terms}});
    }
    b["next"] = successor_json(block.next);
    doc["blocks"].push_back(std::move(b));
  }
  doc["truth"] = json::array();
  for (const auto &t : program.truth)
    doc["truth"].push_back(
        {{"name", t.name},
         {"blocks", t.blocks},
         {"expected_iterations", t.expected_iterations},
         {"parent", t.parent ? json(*t.parent) : json(nullptr)}});
  return doc.dump(2) + "\n";
}

CfgProgram program_from_json(const std::string &text) {
  try {
    const auto doc = json::parse(text);
    if (doc.value("format", "") != kFormat)
      throw ProgramError("not a katlas-program document");
    if (doc.value("version", 0) != kVersion)
      throw ProgramError("unsupported program version " +
                         doc.value("version", json(nullptr)).dump());
    CfgProgram p;
    p.name = doc.value("name", "program");
    p.entry = doc.value("entry", BlockId{0});
    for (const auto &b : doc.at("blocks")) {
      CfgBlock block;
      block.name = b.value("name", "");
      for (const auto &m : b.value("memory", json::array())) {
        MemoryEffect effect;
        const auto op = m.at("op").get<std::string>();
        if (op != "load" && op != "store")
          throw ProgramError("memory op must be load or store, got '" + op +
                             "'");
        effect.is_store = op == "store";
        effect.base = address_from(m.at("base"));
        effect.size = m.value("size", 4u);
        for (const auto &t : m.value("terms", json::array()))
          effect.terms.push_back(
              {t.at("loop").get<BlockId>(), t.at("stride").get<std::int64_t>()});
        block.memory.push_back(std::move(effect));
      }
      block.next = successor_from(b.at("next"));
      p.blocks.push_back(std::move(block));
    }
    for (const auto &t : doc.value("truth", json::array())) {
      GroundTruthKernel k;
      k.name = t.value("name", "");
      k.blocks = t.at("blocks").get<std::vector<BlockId>>();
      k.expected_iterations = t.value("expected_iterations", std::uint64_t{0});
      const auto parent = t.value("parent", json(nullptr));
      if (!parent.is_null())
        k.parent = parent.get<std::size_t>();
      p.truth.push_back(std::move(k));
    }
    validate(p);
    return p;
  } catch (const json::exception &e) {
    throw ProgramError(std::string("program JSON: ") + e.what());
  } catch (const std::logic_error &e) {
    throw ProgramError(std::string("program JSON: ") + e.what());
  }
}

} // namespace katlas
