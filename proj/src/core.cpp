#include "semgraph/core.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "semgraph/errors.hpp"
#include "union_find.hpp"

namespace semgraph {

namespace {

std::string describe(const NodeRef& n) {
  return std::string(n.kind == NodeKind::Component ? "c" : "p") + ":" +
         std::to_string(n.class_id) + "#" + std::to_string(n.instance_id);
}

Edge oriented(Edge e) {
  if (e.a.kind == NodeKind::Predicate && e.b.kind == NodeKind::Component) std::swap(e.a, e.b);
  return e;
}

}  // namespace

ClassCatalog::ClassCatalog(std::vector<std::string> components,
                           std::vector<std::string> predicates, std::size_t attribute_levels)
    : components_(std::move(components)),
      predicates_(std::move(predicates)),
      attribute_levels_(attribute_levels) {
  if (components_.empty()) throw InputError("catalog needs at least one component class");
  if (predicates_.empty()) throw InputError("catalog needs at least one predicate class");
  std::unordered_set<std::string> seen;
  for (const auto* list : {&components_, &predicates_}) {
    for (const auto& name : *list) {
      if (!seen.insert(name).second) throw InputError("duplicate class name '" + name + "'");
    }
  }
}

std::size_t ClassCatalog::size(NodeKind kind) const noexcept {
  return kind == NodeKind::Component ? components_.size() : predicates_.size();
}

std::size_t ClassCatalog::pattern_index(NodeKind kind, std::uint32_t class_id) const noexcept {
  return kind == NodeKind::Component ? class_id : components_.size() + class_id;
}

NodeKind ClassCatalog::pattern_kind(std::size_t pattern) const noexcept {
  return pattern < components_.size() ? NodeKind::Component : NodeKind::Predicate;
}

std::uint32_t ClassCatalog::pattern_class(std::size_t pattern) const noexcept {
  return static_cast<std::uint32_t>(pattern < components_.size() ? pattern
                                                                  : pattern - components_.size());
}

std::vector<std::string> ClassCatalog::pattern_labels() const {
  std::vector<std::string> out = components_;
  out.insert(out.end(), predicates_.begin(), predicates_.end());
  return out;
}

std::optional<std::uint32_t> ClassCatalog::find(NodeKind kind, std::string_view name) const {
  const auto& list = kind == NodeKind::Component ? components_ : predicates_;
  auto it = std::find(list.begin(), list.end(), name);
  if (it == list.end()) return std::nullopt;
  return static_cast<std::uint32_t>(it - list.begin());
}

const std::string& ClassCatalog::name(NodeKind kind, std::uint32_t class_id) const {
  const auto& list = kind == NodeKind::Component ? components_ : predicates_;
  if (class_id >= list.size()) throw InputError("class id " + std::to_string(class_id) + " out of range");
  return list[class_id];
}

bool AtomicGraph::contains(const NodeRef& n) const {
  return std::find(nodes.begin(), nodes.end(), n) != nodes.end();
}

std::size_t AtomicGraph::degree(const NodeRef& n) const {
  return static_cast<std::size_t>(
      std::count_if(edges.begin(), edges.end(), [&](const Edge& e) { return e.a == n || e.b == n; }));
}

AtomicGraph canonical(AtomicGraph g) {
  std::sort(g.nodes.begin(), g.nodes.end());
  g.nodes.erase(std::unique(g.nodes.begin(), g.nodes.end()), g.nodes.end());
  for (auto& e : g.edges) e = oriented(e);
  std::sort(g.edges.begin(), g.edges.end());
  g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
  return g;
}

std::vector<std::string> validate(const AtomicGraph& graph) {
  std::vector<std::string> out;
  std::set<NodeRef> node_set(graph.nodes.begin(), graph.nodes.end());
  if (node_set.size() != graph.nodes.size()) out.emplace_back("duplicate node");

  bool dangling = false;
  bool non_bipartite = false;
  for (const auto& e : graph.edges) {
    if (!node_set.count(e.a) || !node_set.count(e.b)) dangling = true;
    if (e.a.kind == e.b.kind) non_bipartite = true;
  }
  if (non_bipartite) out.emplace_back("non-bipartite edge");
  if (dangling) out.emplace_back("dangling edge endpoint");

  for (const auto& [node, attrs] : graph.attributes) {
    if (!node_set.count(node)) {
      out.emplace_back("attributes for absent node " + describe(node));
      break;
    }
  }

  if (!dangling && node_set.size() > 1) {
    std::vector<NodeRef> index(node_set.begin(), node_set.end());
    auto pos = [&](const NodeRef& n) {
      return static_cast<std::size_t>(std::lower_bound(index.begin(), index.end(), n) - index.begin());
    };
    detail::UnionFind uf(index.size());
    for (const auto& e : graph.edges) uf.unite(pos(e.a), pos(e.b));
    for (std::size_t i = 1; i < index.size(); ++i) {
      if (uf.find(i) != uf.find(0)) {
        out.emplace_back("disconnected graph");
        break;
      }
    }
  }
  return out;
}

std::vector<std::string> validate(const AtomicGraph& graph, const ClassCatalog& catalog) {
  auto out = validate(graph);
  for (const auto& n : graph.nodes) {
    if (n.class_id >= catalog.size(n.kind)) out.push_back("class id out of range for " + describe(n));
  }
  for (const auto& [node, attrs] : graph.attributes) {
    if (attrs.levels.size() > catalog.attribute_levels()) {
      out.push_back("too many attribute levels for " + describe(node));
    }
    if (attrs.levels.size() >= 2) {
      const auto* v = std::get_if<std::vector<double>>(&attrs.levels[1]);
      if (v == nullptr) {
        out.push_back("level-2 attribute is not a feature vector for " + describe(node));
      } else {
        double sq = 0.0;
        for (double x : *v) sq += x * x;
        if (std::abs(std::sqrt(sq) - 1.0) > kFeatureNormTolerance) {
          out.push_back("level-2 feature vector not unit norm for " + describe(node));
        }
      }
    }
  }
  return out;
}

MultiGraph split_atoms(std::int64_t time_index, std::span<const NodeRef> nodes,
                       std::span<const Edge> edges,
                       const std::map<NodeRef, AttributeSet>& attributes) {
  std::vector<NodeRef> index(nodes.begin(), nodes.end());
  std::sort(index.begin(), index.end());
  index.erase(std::unique(index.begin(), index.end()), index.end());
  auto pos = [&](const NodeRef& n) -> std::size_t {
    auto it = std::lower_bound(index.begin(), index.end(), n);
    if (it == index.end() || *it != n) {
      throw InputError("edge references unknown node " + describe(n));
    }
    return static_cast<std::size_t>(it - index.begin());
  };

  detail::UnionFind uf(index.size());
  for (const auto& e : edges) uf.unite(pos(e.a), pos(e.b));
  for (const auto& [node, attrs] : attributes) {
    if (!std::binary_search(index.begin(), index.end(), node)) {
      throw InputError("attributes reference unknown node " + describe(node));
    }
  }

  // Roots are the smallest member of each component, so iterating the
  // sorted node list visits atoms in order of their smallest node.
  std::map<std::size_t, std::size_t> atom_of_root;
  MultiGraph mg{time_index, {}};
  for (std::size_t i = 0; i < index.size(); ++i) {
    auto root = uf.find(i);
    auto [it, inserted] = atom_of_root.emplace(root, mg.atoms.size());
    if (inserted) mg.atoms.emplace_back();
    auto& atom = mg.atoms[it->second];
    atom.nodes.push_back(index[i]);
    if (auto a = attributes.find(index[i]); a != attributes.end()) atom.attributes.insert(*a);
  }
  for (const auto& e : edges) mg.atoms[atom_of_root.at(uf.find(pos(e.a)))].edges.push_back(e);
  for (auto& atom : mg.atoms) atom = canonical(std::move(atom));
  return mg;
}

MultiGraph split_atoms(std::int64_t time_index, const AtomicGraph& g) {
  return split_atoms(time_index, g.nodes, g.edges, g.attributes);
}

AtomicGraph flatten(const MultiGraph& mg) {
  AtomicGraph out;
  for (const auto& atom : mg.atoms) {
    out.nodes.insert(out.nodes.end(), atom.nodes.begin(), atom.nodes.end());
    out.edges.insert(out.edges.end(), atom.edges.begin(), atom.edges.end());
    out.attributes.insert(atom.attributes.begin(), atom.attributes.end());
  }
  return canonical(std::move(out));
}

Goal Goal::universal(const ClassCatalog& catalog) {
  Goal g;
  for (std::uint32_t i = 0; i < catalog.components().size(); ++i) g.components.insert(i);
  for (std::uint32_t i = 0; i < catalog.predicates().size(); ++i) g.predicates.insert(i);
  g.max_attribute_level = catalog.attribute_levels();
  return g;
}

bool Goal::allows(const NodeRef& n) const {
  return n.kind == NodeKind::Component ? components.count(n.class_id) > 0
                                       : predicates.count(n.class_id) > 0;
}

bool Goal::subset_of(const Goal& other) const {
  return std::includes(other.components.begin(), other.components.end(), components.begin(),
                       components.end()) &&
         std::includes(other.predicates.begin(), other.predicates.end(), predicates.begin(),
                       predicates.end()) &&
         max_attribute_level <= other.max_attribute_level;
}

MultiGraph goal_filter(const MultiGraph& mg, const Goal& goal, const ClassCatalog& catalog) {
  for (auto c : goal.components) {
    if (c >= catalog.components().size()) throw InputError("goal references unknown component class");
  }
  for (auto p : goal.predicates) {
    if (p >= catalog.predicates().size()) throw InputError("goal references unknown predicate class");
  }

  std::vector<NodeRef> nodes;
  std::vector<Edge> edges;
  std::map<NodeRef, AttributeSet> attributes;
  for (const auto& atom : mg.atoms) {
    for (const auto& e : atom.edges) {
      if (goal.allows(e.a) && goal.allows(e.b)) edges.push_back(e);
    }
    for (const auto& n : atom.nodes) {
      if (!goal.allows(n)) continue;
      // A predicate that lost every relation to the filter carries no meaning.
      if (n.kind == NodeKind::Predicate && atom.degree(n) > 0) {
        bool attached = std::any_of(edges.begin(), edges.end(),
                                    [&](const Edge& e) { return e.a == n || e.b == n; });
        if (!attached) continue;
      }
      nodes.push_back(n);
      if (auto it = atom.attributes.find(n); it != atom.attributes.end()) {
        AttributeSet trimmed = it->second;
        if (trimmed.levels.size() > goal.max_attribute_level) {
          trimmed.levels.resize(goal.max_attribute_level);
        }
        attributes.emplace(n, std::move(trimmed));
      }
    }
  }
  return split_atoms(mg.time_index, nodes, edges, attributes);
}

}  // namespace semgraph
