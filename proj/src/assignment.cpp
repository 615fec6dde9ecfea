#include "scenegen/assignment.hpp"

#include <cmath>
#include <limits>

#include "scenegen/errors.hpp"

namespace scenegen {
namespace {

struct Potentials {
  std::vector<double> row;  // u
  std::vector<double> col;  // v
  std::vector<int> row_match;
};

// Shortest augmenting path Hungarian method, O(m^3). Returns dual potentials
// with cost(i, j) - u_i - v_j >= 0 and equality on the matching.
Potentials hungarian(const Eigen::MatrixXd& cost) {
  const int m = static_cast<int>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(m + 1, 0.0), v(m + 1, 0.0), minv(m + 1);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  std::vector<char> used(m + 1);
  for (int i = 1; i <= m; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
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
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  Potentials out;
  out.row.assign(u.begin() + 1, u.end());
  out.col.assign(v.begin() + 1, v.end());
  out.row_match.assign(m, -1);
  for (int j = 1; j <= m; ++j) out.row_match[p[j] - 1] = j - 1;
  return out;
}

// Lexicographically smallest perfect matching inside the equality subgraph
// (all optimal assignments), starting from one known perfect matching.
class TightGraphMatcher {
 public:
  TightGraphMatcher(const std::vector<std::vector<char>>& tight, std::vector<int> row_match)
      : tight_(tight), m_(static_cast<int>(row_match.size())), row_match_(std::move(row_match)),
        col_match_(m_, -1), col_fixed_(m_, 0), visited_(m_, 0) {
    for (int i = 0; i < m_; ++i) col_match_[row_match_[i]] = i;
  }

  std::vector<int> run() {
    for (int i = 0; i < m_; ++i) {
      for (int c = 0; c < m_; ++c) {
        if (col_fixed_[c] || !tight_[i][c]) continue;
        if (row_match_[i] == c || reroute(i, c)) break;
      }
      col_fixed_[row_match_[i]] = 1;
    }
    return row_match_;
  }

 private:
  // Try to match row i to column c, re-matching the displaced row through an
  // alternating path that ends at i's old column.
  bool reroute(int i, int c) {
    const int displaced = col_match_[c];
    const int freed = row_match_[i];
    std::fill(visited_.begin(), visited_.end(), 0);
    visited_[c] = 1;
    std::vector<int> path_cols;
    if (!augment(displaced, freed, path_cols)) return false;
    // path_cols lists the columns taken, in order, by the rows along the path.
    int row = displaced;
    for (int col : path_cols) {
      const int next_row = col_match_[col];
      row_match_[row] = col;
      col_match_[col] = row;
      row = next_row;
    }
    row_match_[i] = c;
    col_match_[c] = i;
    return true;
  }

  bool augment(int row, int target_col, std::vector<int>& path_cols) {
    for (int col = 0; col < m_; ++col) {
      if (visited_[col] || col_fixed_[col] || !tight_[row][col]) continue;
      visited_[col] = 1;
      path_cols.push_back(col);
      if (col == target_col) return true;
      if (augment(col_match_[col], target_col, path_cols)) return true;
      path_cols.pop_back();
    }
    return false;
  }

  const std::vector<std::vector<char>>& tight_;
  int m_;
  std::vector<int> row_match_;
  std::vector<int> col_match_;
  std::vector<char> col_fixed_;
  std::vector<char> visited_;
};

}  // namespace

Assignment solve_assignment(const Eigen::MatrixXd& cost) {
  if (cost.rows() == 0 || cost.rows() != cost.cols()) {
    throw InvalidInputError("solve_assignment: cost matrix must be square and non-empty");
  }
  if (!cost.allFinite()) {
    throw InvalidInputError("solve_assignment: cost matrix has a non-finite entry");
  }
  const int m = static_cast<int>(cost.rows());
  Potentials pot = hungarian(cost);

  const double scale = std::max(1.0, cost.cwiseAbs().maxCoeff());
  const double tol = 1e-11 * scale;
  std::vector<std::vector<char>> tight(m, std::vector<char>(m, 0));
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      tight[i][j] = (cost(i, j) - pot.row[i] - pot.col[j]) <= tol;
    }
  }
  for (int i = 0; i < m; ++i) tight[i][pot.row_match[i]] = 1;

  Assignment out;
  out.permutation = TightGraphMatcher(tight, pot.row_match).run();
  for (int i = 0; i < m; ++i) out.total_cost += cost(i, out.permutation[i]);
  return out;
}

}  // namespace scenegen
