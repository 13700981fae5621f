#include <doctest.h>

#include <algorithm>
#include <queue>
#include <random>
#include <set>

#include "semgraph/core.hpp"
#include "semgraph/errors.hpp"

using namespace semgraph;

namespace {

ClassCatalog small_catalog() { return ClassCatalog({"car", "person", "boat"}, {"exists", "near"}); }

// Random bipartite graph: predicates attach to 1-2 random components.
AtomicGraph random_graph(std::mt19937_64& rng, std::size_t max_comps, std::size_t max_preds) {
  std::uniform_int_distribution<std::size_t> nc(0, max_comps), np(0, max_preds);
  AtomicGraph g;
  const auto c = nc(rng);
  for (std::uint32_t i = 0; i < c; ++i) g.nodes.push_back(component(static_cast<std::uint32_t>(rng() % 3), i + 1));
  if (c == 0) return g;
  const auto p = np(rng);
  for (std::uint32_t i = 0; i < p; ++i) {
    const NodeRef pr = predicate(static_cast<std::uint32_t>(rng() % 2), i + 1);
    g.nodes.push_back(pr);
    const auto arity = 1 + rng() % 2;
    for (std::size_t k = 0; k < arity; ++k) g.edges.push_back({g.nodes[rng() % c], pr});
  }
  return canonical(g);
}

// BFS connected components, returned as sorted node sets.
std::set<std::set<NodeRef>> bfs_components(const AtomicGraph& g) {
  std::set<std::set<NodeRef>> out;
  std::set<NodeRef> seen;
  for (const auto& start : g.nodes) {
    if (seen.contains(start)) continue;
    std::set<NodeRef> comp;
    std::queue<NodeRef> q;
    q.push(start);
    seen.insert(start);
    while (!q.empty()) {
      auto n = q.front();
      q.pop();
      comp.insert(n);
      for (const auto& e : g.edges) {
        for (auto [x, y] : {std::pair{e.a, e.b}, std::pair{e.b, e.a}}) {
          if (x == n && !seen.contains(y)) {
            seen.insert(y);
            q.push(y);
          }
        }
      }
    }
    out.insert(comp);
  }
  return out;
}

}  // namespace

TEST_CASE("catalog layout puts components before predicates") {
  const auto cat = small_catalog();
  CHECK(cat.pattern_count() == 5);
  CHECK(cat.pattern_index(NodeKind::Component, 2) == 2);
  CHECK(cat.pattern_index(NodeKind::Predicate, 1) == 4);
  CHECK(cat.pattern_kind(3) == NodeKind::Predicate);
  CHECK(cat.pattern_class(3) == 0);
  CHECK(cat.find(NodeKind::Predicate, "near") == 1u);
  CHECK_FALSE(cat.find(NodeKind::Component, "near").has_value());
  CHECK(cat.pattern_labels() == std::vector<std::string>{"car", "person", "boat", "exists", "near"});
  CHECK_THROWS_AS(ClassCatalog({"a", "a"}, {"p"}), InputError);
  CHECK_THROWS_AS(ClassCatalog({}, {"p"}), InputError);
}

TEST_CASE("canonical sorts, deduplicates and orients edges") {
  AtomicGraph g;
  g.nodes = {predicate(0, 1), component(1, 2), component(0, 1), component(0, 1)};
  g.edges = {{predicate(0, 1), component(1, 2)}, {component(0, 1), predicate(0, 1)}};
  const auto c = canonical(g);
  CHECK(c.nodes == std::vector<NodeRef>{component(0, 1), component(1, 2), predicate(0, 1)});
  REQUIRE(c.edges.size() == 2);
  CHECK(c.edges[0].a == component(0, 1));
  CHECK(c.edges[1].a == component(1, 2));
  CHECK(c.edges[1].b == predicate(0, 1));
}

TEST_CASE("validate reports each violated invariant") {
  const auto cat = small_catalog();
  AtomicGraph ok;
  ok.nodes = {component(0, 1), predicate(1, 1), component(1, 2)};
  ok.edges = {{component(0, 1), predicate(1, 1)}, {component(1, 2), predicate(1, 1)}};
  CHECK(validate(ok).empty());
  CHECK(validate(ok, cat).empty());

  AtomicGraph dup = ok;
  dup.nodes.push_back(component(0, 1));
  CHECK(validate(dup) == std::vector<std::string>{"duplicate node"});

  AtomicGraph bad_edge = ok;
  bad_edge.edges.push_back({component(0, 1), component(1, 2)});
  CHECK(validate(bad_edge) == std::vector<std::string>{"non-bipartite edge"});

  AtomicGraph dangling = ok;
  dangling.edges.push_back({component(2, 9), predicate(1, 1)});
  CHECK(validate(dangling) == std::vector<std::string>{"dangling edge endpoint"});

  AtomicGraph split;
  split.nodes = {component(0, 1), component(0, 2)};
  CHECK(validate(split) == std::vector<std::string>{"disconnected graph"});

  AtomicGraph range = ok;
  range.nodes.push_back(component(7, 3));
  range.edges.push_back({component(7, 3), predicate(1, 1)});
  CHECK(validate(range, cat).size() == 1);

  AtomicGraph feature = ok;
  feature.attributes[component(0, 1)].levels = {std::vector<double>{1.0}, std::vector<double>{0.6, 0.6}};
  CHECK(validate(feature, cat).size() == 1);
  feature.attributes[component(0, 1)].levels[1] = std::vector<double>{0.6, 0.8};
  CHECK(validate(feature, cat).empty());
}

TEST_CASE("split_atoms agrees with a BFS component oracle") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const auto g = random_graph(rng, 6, 5);
    const auto mg = split_atoms(trial, g);
    CHECK(mg.time_index == trial);
    std::set<std::set<NodeRef>> got;
    for (const auto& atom : mg.atoms) {
      CHECK(validate(atom).empty());
      got.insert(std::set<NodeRef>(atom.nodes.begin(), atom.nodes.end()));
    }
    CHECK(got == bfs_components(g));
    for (std::size_t i = 1; i < mg.atoms.size(); ++i) CHECK(mg.atoms[i - 1].nodes.front() < mg.atoms[i].nodes.front());
    CHECK(flatten(mg) == g);
  }
}

TEST_CASE("split_atoms rejects dangling edges and stray attributes") {
  std::vector<NodeRef> nodes{component(0, 1)};
  std::vector<Edge> edges{{component(0, 1), predicate(0, 1)}};
  CHECK_THROWS_AS(split_atoms(0, nodes, edges), InputError);
  std::map<NodeRef, AttributeSet> attrs{{component(1, 1), {}}};
  CHECK_THROWS_AS(split_atoms(0, nodes, {}, attrs), InputError);
  CHECK(split_atoms(0, std::span<const NodeRef>{}, {}).atoms.empty());
}

TEST_CASE("goal_filter matches a set-based oracle") {
  const auto cat = small_catalog();
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const auto g = random_graph(rng, 6, 5);
    Goal goal;
    for (std::uint32_t c = 0; c < 3; ++c) {
      if (rng() % 2) goal.components.insert(c);
    }
    for (std::uint32_t p = 0; p < 2; ++p) {
      if (rng() % 2) goal.predicates.insert(p);
    }
    goal.max_attribute_level = rng() % 4;
    const auto filtered = flatten(goal_filter(split_atoms(0, g), goal, cat));

    std::set<NodeRef> expect;
    for (const auto& n : g.nodes) {
      if (!goal.allows(n)) continue;
      if (n.kind == NodeKind::Predicate && g.degree(n) > 0) {
        bool kept_edge = false;
        for (const auto& e : g.edges) {
          const auto other = e.a == n ? e.b : (e.b == n ? e.a : n);
          if (other != n && goal.allows(other)) kept_edge = true;
        }
        if (!kept_edge) continue;
      }
      expect.insert(n);
    }
    CHECK(std::set<NodeRef>(filtered.nodes.begin(), filtered.nodes.end()) == expect);
    for (const auto& e : filtered.edges) CHECK((expect.contains(e.a) && expect.contains(e.b)));
  }
}

TEST_CASE("goal_filter trims attribute levels and universal goal is identity") {
  const auto cat = small_catalog();
  AtomicGraph g;
  g.nodes = {component(0, 1)};
  g.attributes[component(0, 1)].levels = {std::vector<double>{1, 2}, std::vector<double>{1, 0},
                                          std::vector<std::uint8_t>{0xab}};
  const auto mg = split_atoms(3, g);
  CHECK(goal_filter(mg, Goal::universal(cat), cat) == mg);
  Goal shallow = Goal::universal(cat);
  shallow.max_attribute_level = 1;
  const auto out = goal_filter(mg, shallow, cat);
  CHECK(out.atoms.at(0).attributes.at(component(0, 1)).levels.size() == 1);
  Goal bad;
  bad.components = {9};
  CHECK_THROWS_AS(goal_filter(mg, bad, cat), InputError);
}

TEST_CASE("goal subset relation") {
  const auto cat = small_catalog();
  const Goal all = Goal::universal(cat);
  Goal some;
  some.components = {0};
  some.max_attribute_level = 1;
  CHECK(some.subset_of(all));
  CHECK_FALSE(all.subset_of(some));
  CHECK(all.subset_of(all));
}
