#pragma once

#include <Eigen/Dense>

#include <vector>

namespace scenegen {

struct Assignment {
  // permutation[i] is the column assigned to row i.
  std::vector<int> permutation;
  double total_cost = 0.0;
};

// Exact minimum-cost perfect matching on a square cost matrix (Hungarian
// method with potentials). Among optimal assignments the lexicographically
// smallest permutation is returned. Throws InvalidInputError on non-finite
// entries or an empty matrix.
Assignment solve_assignment(const Eigen::MatrixXd& cost);

}  // namespace scenegen
