#include "semgraph/assignment.hpp"

#include <cmath>
#include <limits>

#include "semgraph/errors.hpp"

namespace semgraph {

Assignment solve_assignment(const std::vector<std::vector<double>>& cost) {
  const std::size_t n = cost.size();
  Assignment out;
  if (n == 0) return out;

  // Infinite entries become a penalty larger than any finite assignment, so
  // the solver only picks one when it has no alternative.
  double penalty = 1.0;
  for (const auto& row : cost) {
    if (row.size() != n) throw InputError("assignment matrix must be square");
    double row_max = 0.0;
    for (double c : row) {
      if (std::isnan(c) || c < 0.0) throw InputError("assignment costs must be >= 0");
      if (std::isfinite(c)) row_max = std::max(row_max, c);
    }
    penalty += row_max;
  }
  penalty *= 2.0;
  auto at = [&](std::size_t i, std::size_t j) {
    const double c = cost[i][j];
    return std::isfinite(c) ? c : penalty;
  };

  // 1-based potentials formulation; p[j] is the row matched to column j.
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = at(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  out.column_of_row.assign(n, 0);
  for (std::size_t j = 1; j <= n; ++j) out.column_of_row[p[j] - 1] = j - 1;
  for (std::size_t i = 0; i < n; ++i) out.cost += cost[i][out.column_of_row[i]];
  return out;
}

}  // namespace semgraph
