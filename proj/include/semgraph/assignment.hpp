#pragma once

#include <vector>

namespace semgraph {

struct Assignment {
  std::vector<std::size_t> column_of_row;
  double cost = 0.0;  // +inf when every complete assignment uses an infinite entry
};

/// Minimum-cost perfect assignment on a square matrix (Kuhn-Munkres with
/// potentials, O(n^3)). Entries may be +inf; they are only chosen when no
/// finite assignment exists.
Assignment solve_assignment(const std::vector<std::vector<double>>& cost);

}  // namespace semgraph
