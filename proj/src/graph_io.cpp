#include "semgraph/graph_io.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>

#include "semgraph/errors.hpp"

namespace semgraph::io {

using nlohmann::json;

namespace {

std::string to_hex(const std::vector<std::uint8_t>& bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xF]);
  }
  return out;
}

std::vector<std::uint8_t> from_hex(const std::string& s) {
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw InputError("invalid hex digit in opaque attribute");
  };
  if (s.size() % 2 != 0) throw InputError("odd-length hex attribute");
  std::vector<std::uint8_t> out(s.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(nibble(s[2 * i]) << 4 | nibble(s[2 * i + 1]));
  }
  return out;
}

json level_to_json(const AttributeLevel& level) {
  if (const auto* v = std::get_if<std::vector<double>>(&level)) return json(*v);
  return json(to_hex(std::get<std::vector<std::uint8_t>>(level)));
}

AttributeLevel level_from_json(const json& j) {
  if (j.is_string()) return from_hex(j.get<std::string>());
  if (j.is_array()) return j.get<std::vector<double>>();
  throw InputError("attribute level must be an array or a hex string");
}

NodeKind kind_from(const std::string& s) {
  if (s == "c") return NodeKind::Component;
  if (s == "p") return NodeKind::Predicate;
  throw InputError("node kind must be \"c\" or \"p\", got \"" + s + "\"");
}

template <typename T>
T field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw InputError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InputError(std::string("bad field '") + key + "': " + e.what());
  }
}

}  // namespace

json to_json(const AtomicGraph& graph, const ClassCatalog& catalog) {
  const AtomicGraph g = canonical(graph);
  json nodes = json::array();
  for (const auto& n : g.nodes) {
    nodes.push_back({{"kind", n.kind == NodeKind::Component ? "c" : "p"},
                     {"class", catalog.name(n.kind, n.class_id)},
                     {"id", n.instance_id}});
  }
  auto index_of = [&](const NodeRef& n) {
    auto it = std::lower_bound(g.nodes.begin(), g.nodes.end(), n);
    if (it == g.nodes.end() || *it != n) throw InputError("edge references a node outside the graph");
    return static_cast<std::size_t>(it - g.nodes.begin());
  };
  json edges = json::array();
  for (const auto& e : g.edges) edges.push_back({index_of(e.a), index_of(e.b)});
  json attrs = json::object();
  for (const auto& [node, set] : g.attributes) {
    json levels = json::array();
    for (const auto& level : set.levels) levels.push_back(level_to_json(level));
    attrs[std::to_string(index_of(node))] = std::move(levels);
  }
  return {{"nodes", std::move(nodes)}, {"edges", std::move(edges)}, {"attrs", std::move(attrs)}};
}

json to_json(const MultiGraph& mg, const ClassCatalog& catalog) {
  json atoms = json::array();
  for (const auto& atom : mg.atoms) atoms.push_back(to_json(atom, catalog));
  return {{"t", mg.time_index}, {"atoms", std::move(atoms)}};
}

AtomicGraph atomic_from_json(const json& j, const ClassCatalog& catalog) {
  AtomicGraph g;
  for (const auto& jn : field<json>(j, "nodes")) {
    const auto kind = kind_from(field<std::string>(jn, "kind"));
    const auto name = field<std::string>(jn, "class");
    const auto cls = catalog.find(kind, name);
    if (!cls) throw InputError("unknown class '" + name + "'");
    g.nodes.push_back({kind, *cls, field<std::uint32_t>(jn, "id")});
  }
  auto node_at = [&](std::size_t i) {
    if (i >= g.nodes.size()) throw InputError("edge node index out of range");
    return g.nodes[i];
  };
  if (j.contains("edges")) {
    for (const auto& je : j.at("edges")) {
      if (!je.is_array() || je.size() != 2) throw InputError("edge must be a [from, to] pair");
      g.edges.push_back({node_at(je[0].get<std::size_t>()), node_at(je[1].get<std::size_t>())});
    }
  }
  if (j.contains("attrs")) {
    for (const auto& [key, levels] : j.at("attrs").items()) {
      std::size_t idx = 0;
      try {
        idx = std::stoul(key);
      } catch (const std::exception&) {
        throw InputError("attribute key '" + key + "' is not a node index");
      }
      AttributeSet set;
      for (const auto& level : levels) set.levels.push_back(level_from_json(level));
      g.attributes.emplace(node_at(idx), std::move(set));
    }
  }
  return canonical(std::move(g));
}

MultiGraph multigraph_from_json(const json& j, const ClassCatalog& catalog) {
  MultiGraph mg;
  mg.time_index = field<std::int64_t>(j, "t");
  for (const auto& ja : field<json>(j, "atoms")) mg.atoms.push_back(atomic_from_json(ja, catalog));
  return mg;
}

std::string canonical_string(const AtomicGraph& g, const ClassCatalog& catalog) {
  return to_json(g, catalog).dump();
}

std::string canonical_string(const AttributeLevel& level) { return level_to_json(level).dump(); }

std::vector<MultiGraph> read_graph_stream(std::istream& in, const ClassCatalog& catalog) {
  std::vector<MultiGraph> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(multigraph_from_json(json::parse(line), catalog));
    } catch (const json::parse_error& e) {
      throw InputError("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const InputError& e) {
      throw InputError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void write_graph_stream(std::ostream& out, const std::vector<MultiGraph>& stream,
                        const ClassCatalog& catalog) {
  for (const auto& mg : stream) out << to_json(mg, catalog).dump() << '\n';
}

ClassCatalog infer_catalog(std::istream& in, std::size_t attribute_levels) {
  std::set<std::string> components;
  std::set<std::string> predicates;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw InputError(e.what());
    }
    for (const auto& atom : field<json>(j, "atoms")) {
      for (const auto& n : field<json>(atom, "nodes")) {
        auto kind = kind_from(field<std::string>(n, "kind"));
        (kind == NodeKind::Component ? components : predicates).insert(field<std::string>(n, "class"));
      }
    }
  }
  // A catalog needs both lists non-empty; streams without predicates get a
  // placeholder so they still load.
  if (predicates.empty()) predicates.insert("exists");
  if (components.empty()) throw InputError("stream contains no component classes");
  return ClassCatalog({components.begin(), components.end()}, {predicates.begin(), predicates.end()},
                      attribute_levels);
}

json to_json(const ClassCatalog& catalog) {
  return {{"components", catalog.components()},
          {"predicates", catalog.predicates()},
          {"attribute_levels", catalog.attribute_levels()}};
}

ClassCatalog catalog_from_json(const json& j) {
  return ClassCatalog(field<std::vector<std::string>>(j, "components"),
                      field<std::vector<std::string>>(j, "predicates"),
                      j.value("attribute_levels", std::size_t{3}));
}

json to_json(const Goal& goal, const ClassCatalog& catalog) {
  json comps = json::array();
  for (auto c : goal.components) comps.push_back(catalog.name(NodeKind::Component, c));
  json preds = json::array();
  for (auto p : goal.predicates) preds.push_back(catalog.name(NodeKind::Predicate, p));
  return {{"components", comps}, {"predicates", preds}, {"max_attribute_level", goal.max_attribute_level}};
}

Goal goal_from_json(const json& j, const ClassCatalog& catalog) {
  Goal goal = Goal::universal(catalog);
  auto load = [&](const char* key, NodeKind kind, std::set<std::uint32_t>& dst) {
    if (!j.contains(key)) return;
    dst.clear();
    for (const auto& name : field<std::vector<std::string>>(j, key)) {
      auto id = catalog.find(kind, name);
      if (!id) throw InputError("goal references unknown class '" + name + "'");
      dst.insert(*id);
    }
  };
  load("components", NodeKind::Component, goal.components);
  load("predicates", NodeKind::Predicate, goal.predicates);
  if (j.contains("max_attribute_level")) goal.max_attribute_level = field<std::size_t>(j, "max_attribute_level");
  return goal;
}

}  // namespace semgraph::io
