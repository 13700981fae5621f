#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. Nothing here calls into the code under test beyond data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "semgraph/core.hpp"
#include "semgraph/ged.hpp"
#include "semgraph/hmm.hpp"

namespace oracle {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Row-stochastic matrix with entries drawn from U(0, 1), optionally with
// some entries zeroed (at least one positive entry kept per row).
inline Eigen::MatrixXd random_stochastic(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols,
                                         double zero_prob = 0.0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = u(rng) < zero_prob ? 0.0 : u(rng) + 1e-3;
    if (m.row(r).sum() == 0.0) m(r, std::uniform_int_distribution<Eigen::Index>(0, cols - 1)(rng)) = 1.0;
    m.row(r) /= m.row(r).sum();
  }
  return m;
}

inline semgraph::hmm::HmmModel random_hmm(std::mt19937_64& rng, std::size_t n, std::size_t m,
                                          double zero_prob = 0.0) {
  const auto N = static_cast<Eigen::Index>(n);
  const auto M = static_cast<Eigen::Index>(m);
  Eigen::MatrixXd p = random_stochastic(rng, 1, N, zero_prob);
  return semgraph::hmm::make_model(random_stochastic(rng, N, N, zero_prob), random_stochastic(rng, N, M, zero_prob),
                                   p.row(0).transpose());
}

struct BruteViterbi {
  std::vector<std::size_t> states;
  double log_prob = -kInf;
};

// Enumerates all N^T state sequences; the joint log probability is summed in
// the same order as the recursion (initial + emission, then transition and
// emission per step). Among maximal sequences the one that is smallest when
// compared from the last step backwards wins.
inline BruteViterbi brute_viterbi(const semgraph::hmm::HmmModel& model, const std::vector<std::size_t>& obs) {
  const std::size_t n = model.states();
  const std::size_t t_len = obs.size();
  std::vector<std::size_t> q(t_len, 0);
  BruteViterbi best;
  bool have = false;
  auto reverse_less = [&](const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    for (std::size_t t = t_len; t-- > 0;) {
      if (a[t] != b[t]) return a[t] < b[t];
    }
    return false;
  };
  for (;;) {
    double s = std::log(model.p(q[0])) + std::log(model.B(q[0], obs[0]));
    for (std::size_t t = 1; t < t_len; ++t) {
      s = s + std::log(model.A(q[t - 1], q[t]));
      s = s + std::log(model.B(q[t], obs[t]));
    }
    if (!have || s > best.log_prob || (s == best.log_prob && reverse_less(q, best.states))) {
      best.log_prob = s;
      best.states = q;
      have = true;
    }
    std::size_t pos = 0;
    while (pos < t_len && ++q[pos] == n) q[pos++] = 0;
    if (pos == t_len) break;
  }
  return best;
}

// Exhaustive node-only edit search: every g1 node is either substituted by a
// distinct unused g2 node or deleted; unmatched g2 nodes are inserted.
// Cross-kind substitutions and predicate arity mismatches cost +inf.
inline double brute_ged(const semgraph::AtomicGraph& g1, const semgraph::AtomicGraph& g2,
                        const semgraph::ged::EditCostTable& costs) {
  using semgraph::NodeKind;
  const auto& a = g1.nodes;
  const auto& b = g2.nodes;
  auto idx = [&](const semgraph::NodeRef& n) {
    std::size_t comps = 0;
    for (auto k : costs.kinds) comps += k == NodeKind::Component;
    return n.kind == NodeKind::Component ? n.class_id : comps + n.class_id;
  };
  std::vector<bool> used(b.size(), false);
  double best = kInf;
  std::function<void(std::size_t, double)> dfs = [&](std::size_t i, double acc) {
    if (acc == kInf || acc >= best) return;
    if (i == a.size()) {
      double total = acc;
      for (std::size_t j = 0; j < b.size(); ++j) {
        if (!used[j]) total += costs.insert[idx(b[j])];
      }
      best = std::min(best, total);
      return;
    }
    dfs(i + 1, acc + costs.remove[idx(a[i])]);
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (used[j] || a[i].kind != b[j].kind) continue;
      if (a[i].kind == NodeKind::Predicate && g1.degree(a[i]) != g2.degree(b[j])) continue;
      used[j] = true;
      dfs(i + 1, acc + costs.substitute[idx(a[i])][idx(b[j])]);
      used[j] = false;
    }
  };
  dfs(0, 0.0);
  return best;
}

}  // namespace oracle
