#include "doctest.h"
#include "scenegen/assignment.hpp"
#include "support.hpp"

#include <cmath>
#include <limits>

using namespace scenegen;
using namespace testsupport;

TEST_CASE("assignment basics") {
  const Assignment z = solve_assignment(Eigen::MatrixXd::Zero(4, 4));
  CHECK(z.permutation == std::vector<int>{0, 1, 2, 3});
  CHECK(z.total_cost == 0.0);

  Eigen::MatrixXd c(2, 2);
  c << 0, 1, 1, 0;
  const Assignment a = solve_assignment(c);
  CHECK(a.permutation == std::vector<int>{0, 1});
  CHECK(a.total_cost == 0.0);

  c << 1, 0, 0, 1;
  CHECK(solve_assignment(c).permutation == std::vector<int>{1, 0});

  Eigen::MatrixXd one(1, 1);
  one << 3.5;
  CHECK(solve_assignment(one).total_cost == 3.5);
}

TEST_CASE("assignment errors") {
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(3, 3);
  c(1, 2) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(solve_assignment(c), InvalidInputError);
  c(1, 2) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(solve_assignment(c), InvalidInputError);
  CHECK_THROWS_AS(solve_assignment(Eigen::MatrixXd(0, 0)), InvalidInputError);
}

TEST_CASE("ties resolve to the lexicographically smallest permutation") {
  Eigen::MatrixXd c = Eigen::MatrixXd::Ones(3, 3);
  CHECK(solve_assignment(c).permutation == std::vector<int>{0, 1, 2});
  c << 1, 0, 0, 0, 1, 0, 0, 0, 1;  // several zero-cost matchings
  CHECK(solve_assignment(c).permutation == std::vector<int>{1, 2, 0});
}

TEST_CASE("property: assignment equals brute force on random matrices") {
  Rng rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const int m = rng.uniform_int(1, 6);
    Eigen::MatrixXd c(m, m);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) c(i, j) = trial % 3 == 0 ? rng.uniform_int(0, 3) : rng.normal();
    }
    const Assignment a = solve_assignment(c);
    double sum = 0.0;
    std::vector<int> seen(m, 0);
    for (int i = 0; i < m; ++i) {
      sum += c(i, a.permutation[i]);
      ++seen[a.permutation[i]];
    }
    CHECK(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }));
    CHECK(sum == a.total_cost);
    CHECK(std::abs(a.total_cost - brute_force_assignment(c)) < 1e-12);
  }
}
