#include "semgraph/ged.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "semgraph/assignment.hpp"
#include "semgraph/errors.hpp"

namespace semgraph::ged {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

nlohmann::json cost_to_json(double c) { return std::isfinite(c) ? nlohmann::json(c) : nlohmann::json(nullptr); }

double cost_from_json(const nlohmann::json& j) { return j.is_null() ? kInf : j.get<double>(); }

struct KindResult {
  std::vector<EditOp> ops;
  std::vector<std::pair<NodeRef, NodeRef>> matches;
};

// Optimal node mapping for one node kind as an (n+m)x(n+m) assignment:
// substitutions top-left, deletions on the top-right diagonal, insertions on
// the bottom-left diagonal, free dummy-to-dummy pairs bottom-right.
KindResult assign_kind(const AtomicGraph& g1, const std::vector<NodeRef>& left, const AtomicGraph& g2,
                       const std::vector<NodeRef>& right, const EditCostTable& costs) {
  const std::size_t n = left.size();
  const std::size_t m = right.size();
  std::vector<std::vector<double>> matrix(n + m, std::vector<double>(n + m, kInf));
  std::vector<std::size_t> left_degree(n), right_degree(m);
  for (std::size_t i = 0; i < n; ++i) left_degree[i] = g1.degree(left[i]);
  for (std::size_t j = 0; j < m; ++j) right_degree[j] = g2.degree(right[j]);

  for (std::size_t i = 0; i < n; ++i) {
    const auto from = costs.index_of(left[i]);
    for (std::size_t j = 0; j < m; ++j) {
      const bool arity_ok = left[i].kind == NodeKind::Component || left_degree[i] == right_degree[j];
      matrix[i][j] = arity_ok ? costs.substitute[from][costs.index_of(right[j])] : kInf;
    }
    matrix[i][m + i] = costs.remove[from];
  }
  for (std::size_t j = 0; j < m; ++j) matrix[n + j][j] = costs.insert[costs.index_of(right[j])];
  for (std::size_t i = n; i < n + m; ++i) {
    for (std::size_t j = m; j < n + m; ++j) matrix[i][j] = 0.0;
  }

  const auto solution = solve_assignment(matrix);
  KindResult out;
  for (std::size_t i = 0; i < n + m; ++i) {
    const std::size_t j = solution.column_of_row[i];
    const double c = matrix[i][j];
    if (i < n && j < m) {
      if (left[i].class_id == right[j].class_id && c == 0.0) {
        out.matches.emplace_back(left[i], right[j]);
      } else {
        out.ops.push_back({EditOp::Type::Substitute, left[i], right[j], c});
      }
    } else if (i < n) {
      out.ops.push_back({EditOp::Type::Delete, left[i], std::nullopt, c});
    } else if (j < m) {
      out.ops.push_back({EditOp::Type::Insert, std::nullopt, right[j], c});
    }
  }
  return out;
}

std::vector<NodeRef> of_kind(const AtomicGraph& g, NodeKind kind) {
  std::vector<NodeRef> out;
  for (const auto& n : g.nodes) {
    if (n.kind == kind) out.push_back(n);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool same_graph(const AtomicGraph& a, const AtomicGraph& b, const EditCostTable& costs) {
  return ged(a, b, costs).distance == 0.0 && ged(b, a, costs).distance == 0.0;
}

}  // namespace

double neg_log(double p) {
  if (!(p >= 0.0) || p > 1.0 + 1e-12) throw InputError("probability outside [0, 1]");
  return p <= 0.0 ? kInf : (p >= 1.0 ? 0.0 : -std::log(p));
}

std::size_t EditCostTable::component_count() const noexcept {
  return static_cast<std::size_t>(std::count(kinds.begin(), kinds.end(), NodeKind::Component));
}

std::size_t EditCostTable::index_of(const NodeRef& n) const {
  const std::size_t comps = component_count();
  const std::size_t idx = n.kind == NodeKind::Component ? n.class_id : comps + n.class_id;
  const bool in_range = n.kind == NodeKind::Component ? n.class_id < comps : idx < size();
  if (!in_range) throw InputError("node class has no entry in the edit cost table");
  return idx;
}

EditCostTable EditCostTable::scaled(double factor) const {
  EditCostTable out = *this;
  for (auto& c : out.insert) c *= factor;
  for (auto& c : out.remove) c *= factor;
  for (auto& row : out.substitute) {
    for (auto& c : row) c *= factor;
  }
  return out;
}

void check(const EditCostTable& costs) {
  const std::size_t k = costs.size();
  if (costs.kinds.size() != k || costs.insert.size() != k || costs.remove.size() != k ||
      costs.substitute.size() != k) {
    throw InputError("edit cost table shape mismatch");
  }
  if (!costs.prevalence_cost.empty() && costs.prevalence_cost.size() != k) {
    throw InputError("prevalence cost length mismatch");
  }
  for (std::size_t i = 1; i < k; ++i) {
    if (costs.kinds[i - 1] == NodeKind::Predicate && costs.kinds[i] == NodeKind::Component) {
      throw InputError("component patterns must precede predicate patterns");
    }
  }
  auto valid = [](double c) { return c >= 0.0; };  // NaN fails, +inf passes
  for (std::size_t i = 0; i < k; ++i) {
    if (!valid(costs.insert[i]) || !valid(costs.remove[i])) throw InputError("negative edit cost");
    if (costs.substitute[i].size() != k) throw InputError("substitution matrix must be square");
    for (std::size_t j = 0; j < k; ++j) {
      const double c = costs.substitute[i][j];
      if (!valid(c)) throw InputError("negative edit cost");
      if (i == j && c != 0.0) throw InputError("substitution diagonal must be zero");
      if (costs.kinds[i] != costs.kinds[j] && std::isfinite(c)) {
        throw InputError("cross-kind substitution must be infinite");
      }
    }
  }
}

EditCostTable build_costs(const confusion::ConfusionMatrix& cm,
                          const std::optional<std::vector<double>>& prevalence,
                          std::vector<NodeKind> kinds) {
  const std::size_t k = cm.size();
  if (kinds.empty()) kinds.assign(k, NodeKind::Component);
  if (kinds.size() != k) throw InputError("pattern kind list length mismatch");
  if (prevalence) {
    if (prevalence->size() != k) throw InputError("prevalence length does not match the confusion matrix");
    for (double p : *prevalence) {
      if (!(p > 0.0 && p <= 1.0)) throw InputError("prevalence entries must lie in (0, 1]");
    }
  }

  EditCostTable out;
  out.labels = cm.labels();
  out.kinds = std::move(kinds);
  out.basis = prevalence ? CostBasis::Posterior : CostBasis::Prior;
  out.substitute.assign(k, std::vector<double>(k, kInf));
  for (std::size_t i = 0; i < k; ++i) {
    const auto m = confusion::metrics(cm, i);
    out.insert.push_back(neg_log(m.fpr));
    out.remove.push_back(neg_log(m.fnr));
    const double ni = static_cast<double>(cm.pattern_total(i));
    for (std::size_t j = 0; j < k; ++j) {
      if (i == j) {
        out.substitute[i][j] = 0.0;
        continue;
      }
      if (out.kinds[i] != out.kinds[j]) continue;
      double p = static_cast<double>(cm.count(i, j)) / ni;
      if (prevalence) p = std::min(1.0, p * (*prevalence)[i] / (*prevalence)[j]);
      out.substitute[i][j] = neg_log(p);
    }
    if (prevalence) out.prevalence_cost.push_back(neg_log((*prevalence)[i]));
  }
  check(out);
  return out;
}

EditCostTable combine(const EditCostTable& components, const EditCostTable& predicates) {
  EditCostTable out;
  const std::size_t a = components.size();
  const std::size_t b = predicates.size();
  out.basis = components.basis;
  out.labels = components.labels;
  out.labels.insert(out.labels.end(), predicates.labels.begin(), predicates.labels.end());
  out.kinds.assign(a, NodeKind::Component);
  out.kinds.insert(out.kinds.end(), b, NodeKind::Predicate);
  out.insert = components.insert;
  out.insert.insert(out.insert.end(), predicates.insert.begin(), predicates.insert.end());
  out.remove = components.remove;
  out.remove.insert(out.remove.end(), predicates.remove.begin(), predicates.remove.end());
  out.substitute.assign(a + b, std::vector<double>(a + b, kInf));
  for (std::size_t i = 0; i < a; ++i) {
    for (std::size_t j = 0; j < a; ++j) out.substitute[i][j] = components.substitute[i][j];
  }
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < b; ++j) out.substitute[a + i][a + j] = predicates.substitute[i][j];
  }
  if (!components.prevalence_cost.empty() && !predicates.prevalence_cost.empty()) {
    out.prevalence_cost = components.prevalence_cost;
    out.prevalence_cost.insert(out.prevalence_cost.end(), predicates.prevalence_cost.begin(),
                               predicates.prevalence_cost.end());
  }
  check(out);
  return out;
}

double path_cost(std::span<const EditOp> path) {
  double total = 0.0;
  for (const auto& op : path) total += op.cost;
  return total;
}

GedResult ged(const AtomicGraph& g1, const AtomicGraph& g2, const EditCostTable& costs) {
  GedResult out;
  for (auto kind : {NodeKind::Component, NodeKind::Predicate}) {
    auto part = assign_kind(g1, of_kind(g1, kind), g2, of_kind(g2, kind), costs);
    out.path.insert(out.path.end(), part.ops.begin(), part.ops.end());
    out.matches.insert(out.matches.end(), part.matches.begin(), part.matches.end());
  }
  out.distance = path_cost(out.path);
  return out;
}

SmoothResult smooth(std::span<const AtomicGraph> stream, const EditCostTable& costs, double threshold,
                    std::size_t required_streak, const AtomicGraph& initial) {
  if (!(threshold > 0.0)) throw InputError("significance threshold must be > 0");
  if (required_streak == 0) throw InputError("required streak must be >= 1");

  SmoothResult out;
  BaselineState state{canonical(initial), std::nullopt, 0, required_streak};
  // Distinct graphs seen since the baseline was last confirmed, with the
  // frame each first appeared on.
  std::vector<std::pair<AtomicGraph, std::size_t>> excursion;

  out.output.reserve(stream.size());
  for (std::size_t t = 0; t < stream.size(); ++t) {
    const AtomicGraph& g = stream[t];
    out.output.push_back(state.base);
    if (ged(state.base, g, costs).distance <= threshold) {
      state.candidate.reset();
      state.streak = 0;
      excursion.clear();
      continue;
    }

    auto seen = std::find_if(excursion.begin(), excursion.end(),
                             [&](const auto& entry) { return same_graph(entry.first, g, costs); });
    if (seen == excursion.end()) excursion.emplace_back(canonical(g), t);

    if (state.candidate && same_graph(*state.candidate, g, costs)) {
      ++state.streak;
    } else {
      state.candidate = canonical(g);
      state.streak = 1;
    }
    if (state.streak < required_streak) continue;

    const auto first = std::find_if(excursion.begin(), excursion.end(), [&](const auto& entry) {
                         return same_graph(entry.first, *state.candidate, costs);
                       })->second;
    out.events.push_back(
        {first, ged(state.base, *state.candidate, costs).distance, state.base, *state.candidate});
    state.base = stream[first];
    state.base = canonical(std::move(state.base));
    for (std::size_t k = first; k <= t; ++k) out.output[k] = state.base;
    state.candidate.reset();
    state.streak = 0;
    excursion.clear();
  }
  out.final_state = std::move(state);
  return out;
}

nlohmann::json to_json(const EditCostTable& costs) {
  nlohmann::json patterns = nlohmann::json::array();
  for (std::size_t i = 0; i < costs.size(); ++i) {
    patterns.push_back({{"label", costs.labels[i]}, {"kind", costs.kinds[i] == NodeKind::Component ? "c" : "p"}});
  }
  auto vec = [](const std::vector<double>& v) {
    nlohmann::json out = nlohmann::json::array();
    for (double c : v) out.push_back(cost_to_json(c));
    return out;
  };
  nlohmann::json sub = nlohmann::json::array();
  for (const auto& row : costs.substitute) sub.push_back(vec(row));
  nlohmann::json out = {{"basis", costs.basis == CostBasis::Prior ? "prior" : "posterior"},
                        {"patterns", patterns},
                        {"insert", vec(costs.insert)},
                        {"delete", vec(costs.remove)},
                        {"substitute", sub}};
  if (!costs.prevalence_cost.empty()) out["prevalence_cost"] = vec(costs.prevalence_cost);
  return out;
}

EditCostTable costs_from_json(const nlohmann::json& j) {
  EditCostTable out;
  try {
    out.basis = j.value("basis", std::string("prior")) == "posterior" ? CostBasis::Posterior : CostBasis::Prior;
    for (const auto& p : j.at("patterns")) {
      out.labels.push_back(p.at("label").get<std::string>());
      const auto kind = p.value("kind", std::string("c"));
      if (kind != "c" && kind != "p") throw InputError("pattern kind must be \"c\" or \"p\"");
      out.kinds.push_back(kind == "c" ? NodeKind::Component : NodeKind::Predicate);
    }
    for (const auto& c : j.at("insert")) out.insert.push_back(cost_from_json(c));
    for (const auto& c : j.at("delete")) out.remove.push_back(cost_from_json(c));
    for (const auto& row : j.at("substitute")) {
      std::vector<double> r;
      for (const auto& c : row) r.push_back(cost_from_json(c));
      out.substitute.push_back(std::move(r));
    }
    if (j.contains("prevalence_cost")) {
      for (const auto& c : j.at("prevalence_cost")) out.prevalence_cost.push_back(cost_from_json(c));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("bad edit cost file: ") + e.what());
  }
  check(out);
  return out;
}

ClassCatalog catalog_of(const EditCostTable& costs) {
  std::vector<std::string> comps, preds;
  for (std::size_t i = 0; i < costs.size(); ++i) {
    (costs.kinds[i] == NodeKind::Component ? comps : preds).push_back(costs.labels[i]);
  }
  if (preds.empty()) preds.push_back("exists");
  return ClassCatalog(std::move(comps), std::move(preds));
}

}  // namespace semgraph::ged
