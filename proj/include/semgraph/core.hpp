#pragma once

// Semantic language data model: class catalogs, instance graphs with
// attribute sets, multi-graph frames and goals.

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace semgraph {

enum class NodeKind : std::uint8_t { Component = 0, Predicate = 1 };

/// Ordered component and predicate class names. Component classes occupy
/// pattern indices [0, N_c), predicate classes [N_c, N_c + N_p).
class ClassCatalog {
 public:
  ClassCatalog() = default;
  /// Throws InputError when a list is empty or a name repeats.
  ClassCatalog(std::vector<std::string> components, std::vector<std::string> predicates,
               std::size_t attribute_levels = 3);

  const std::vector<std::string>& components() const noexcept { return components_; }
  const std::vector<std::string>& predicates() const noexcept { return predicates_; }
  std::size_t attribute_levels() const noexcept { return attribute_levels_; }

  std::size_t size(NodeKind kind) const noexcept;
  std::size_t pattern_count() const noexcept { return components_.size() + predicates_.size(); }
  std::size_t pattern_index(NodeKind kind, std::uint32_t class_id) const noexcept;
  NodeKind pattern_kind(std::size_t pattern) const noexcept;
  std::uint32_t pattern_class(std::size_t pattern) const noexcept;
  std::vector<std::string> pattern_labels() const;

  std::optional<std::uint32_t> find(NodeKind kind, std::string_view name) const;
  const std::string& name(NodeKind kind, std::uint32_t class_id) const;

  bool operator==(const ClassCatalog&) const = default;

 private:
  std::vector<std::string> components_;
  std::vector<std::string> predicates_;
  std::size_t attribute_levels_ = 3;
};

struct NodeRef {
  NodeKind kind = NodeKind::Component;
  std::uint32_t class_id = 0;
  std::uint32_t instance_id = 0;

  auto operator<=>(const NodeRef&) const = default;
};

inline NodeRef component(std::uint32_t class_id, std::uint32_t instance_id) {
  return {NodeKind::Component, class_id, instance_id};
}
inline NodeRef predicate(std::uint32_t class_id, std::uint32_t instance_id) {
  return {NodeKind::Predicate, class_id, instance_id};
}

/// Level 1 and 2 payloads are numeric vectors (level 2 is a unit-norm
/// feature vector); levels 3+ are opaque bytes that are never interpreted.
using AttributeLevel = std::variant<std::vector<double>, std::vector<std::uint8_t>>;

struct AttributeSet {
  std::vector<AttributeLevel> levels;

  bool operator==(const AttributeSet&) const = default;
};

inline constexpr double kFeatureNormTolerance = 1e-6;

struct Edge {
  NodeRef a;
  NodeRef b;

  auto operator<=>(const Edge&) const = default;
};

struct AtomicGraph {
  std::vector<NodeRef> nodes;
  std::vector<Edge> edges;
  std::map<NodeRef, AttributeSet> attributes;

  bool empty() const noexcept { return nodes.empty(); }
  bool contains(const NodeRef& n) const;
  std::size_t degree(const NodeRef& n) const;

  bool operator==(const AtomicGraph&) const = default;
};

/// Sorted, de-duplicated nodes; edges oriented component-first when they
/// join a component and a predicate, then sorted.
AtomicGraph canonical(AtomicGraph g);

/// One message per violated invariant; empty means valid.
std::vector<std::string> validate(const AtomicGraph& graph);
/// Adds class-range, attribute level count and feature-norm checks.
std::vector<std::string> validate(const AtomicGraph& graph, const ClassCatalog& catalog);

struct MultiGraph {
  std::int64_t time_index = 0;
  std::vector<AtomicGraph> atoms;

  bool operator==(const MultiGraph&) const = default;
};

/// Connected components of (nodes, edges), each canonical, ordered by their
/// smallest node. Throws InputError on dangling edges or stray attributes.
MultiGraph split_atoms(std::int64_t time_index, std::span<const NodeRef> nodes,
                       std::span<const Edge> edges,
                       const std::map<NodeRef, AttributeSet>& attributes = {});

/// Union of all atoms into a single (possibly disconnected) graph.
AtomicGraph flatten(const MultiGraph& mg);
MultiGraph split_atoms(std::int64_t time_index, const AtomicGraph& g);

struct Goal {
  std::set<std::uint32_t> components;
  std::set<std::uint32_t> predicates;
  std::size_t max_attribute_level = 0;

  static Goal universal(const ClassCatalog& catalog);
  bool allows(const NodeRef& n) const;
  /// Subset relation on both whitelists and the attribute depth.
  bool subset_of(const Goal& other) const;

  bool operator==(const Goal&) const = default;
};

/// Keeps whitelisted nodes, drops predicates orphaned by the filter and
/// attribute levels deeper than the goal allows, then re-splits atoms.
MultiGraph goal_filter(const MultiGraph& mg, const Goal& goal, const ClassCatalog& catalog);

}  // namespace semgraph
