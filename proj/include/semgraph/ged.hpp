#pragma once

// Statistical graph edit distance over atomic bipartite graphs, with node
// edit costs taken as negative log probabilities from an extractor's
// confusion statistics, and the baseline-update smoothing filter.
//
// Triangle inequality does not hold in general for these costs.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "semgraph/confusion.hpp"
#include "semgraph/core.hpp"

namespace semgraph::ged {

enum class CostBasis { Prior, Posterior };

/// -ln p with -ln 0 = +inf.
double neg_log(double p);

/// Per-pattern edit costs. Patterns are laid out components first, so a
/// predicate of class p lives at index component_count() + p.
struct EditCostTable {
  std::vector<std::string> labels;
  std::vector<NodeKind> kinds;
  std::vector<double> insert;
  std::vector<double> remove;
  std::vector<std::vector<double>> substitute;  // [from][to]
  std::vector<double> prevalence_cost;          // -ln prevalence, empty when unknown
  CostBasis basis = CostBasis::Prior;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t component_count() const noexcept;
  /// Throws InputError for a class outside the table.
  std::size_t index_of(const NodeRef& n) const;
  EditCostTable scaled(double factor) const;
};

/// Throws InputError when shapes disagree, a cost is negative, the
/// diagonal is non-zero, a cross-kind substitution is finite, or components
/// do not precede predicates.
void check(const EditCostTable& costs);

/// Prior mode (no prevalence): insert_i = -ln FPR_i, delete_i = -ln FNR_i,
/// substitute_ij = -ln(n_ij / N_i). With prevalence, substitutions use the
/// posterior P(true = i | observed = j) = (n_ij / N_i) * pi_i / pi_j, capped
/// at 1. `kinds` defaults to all components.
EditCostTable build_costs(const confusion::ConfusionMatrix& cm,
                          const std::optional<std::vector<double>>& prevalence = std::nullopt,
                          std::vector<NodeKind> kinds = {});

/// Block table: component patterns, then predicate patterns, with +inf
/// between kinds.
EditCostTable combine(const EditCostTable& components, const EditCostTable& predicates);

struct EditOp {
  enum class Type { Insert, Delete, Substitute };
  Type type = Type::Substitute;
  std::optional<NodeRef> from;
  std::optional<NodeRef> to;
  double cost = 0.0;
};

struct GedResult {
  double distance = 0.0;  // may be +inf
  std::vector<EditOp> path;
  /// Node pairs mapped onto each other without an edit (same class).
  std::vector<std::pair<NodeRef, NodeRef>> matches;
};

/// Exact node-only GED: independent optimal assignments over component and
/// predicate nodes. Predicates only substitute for predicates of equal degree.
GedResult ged(const AtomicGraph& g1, const AtomicGraph& g2, const EditCostTable& costs);

/// Sum of edit costs of a path (+inf propagates).
double path_cost(std::span<const EditOp> path);

/// Baseline tracking state of the smoothing filter.
struct BaselineState {
  AtomicGraph base;
  std::optional<AtomicGraph> candidate;
  std::size_t streak = 0;
  std::size_t required_streak = 5;
};

struct InnovationEvent {
  std::size_t frame = 0;  // position in the input stream
  double distance = 0.0;
  AtomicGraph from;
  AtomicGraph to;
};

struct SmoothResult {
  std::vector<AtomicGraph> output;  // piecewise constant, changes only at events
  std::vector<InnovationEvent> events;
  BaselineState final_state;
};

/// Baseline-update filter. Frames within `threshold` of the baseline are
/// replaced by it. A graph seen on `required_streak` consecutive frames
/// (mutually zero GED) and farther than `threshold` from the baseline
/// becomes the new baseline; the event is dated at the first frame since the
/// baseline was last confirmed on which that graph appeared, and the output
/// switches there.
SmoothResult smooth(std::span<const AtomicGraph> stream, const EditCostTable& costs, double threshold,
                    std::size_t required_streak = 5, const AtomicGraph& initial = {});

nlohmann::json to_json(const EditCostTable& costs);
EditCostTable costs_from_json(const nlohmann::json& j);

/// Table labels and kinds laid out as a catalog (components then predicates).
ClassCatalog catalog_of(const EditCostTable& costs);

}  // namespace semgraph::ged
