#include <doctest.h>

#include "fusetrack/assignment.hpp"
#include "oracles.hpp"

using namespace fusetrack;

TEST_CASE("assignment picks the diagonal when it dominates") {
  Eigen::MatrixXd sim(2, 2);
  sim << 0.9, 0.1, 0.2, 0.8;
  const auto result = solve_assignment(sim);
  CHECK(result == std::vector<int>{0, 1});
}

TEST_CASE("assignment prefers total over individual best") {
  // Row 0's best column is 1, but the total is higher when it takes 0.
  Eigen::MatrixXd sim(2, 2);
  sim << 0.51, 0.9, 0.0, 0.52;
  const auto result = solve_assignment(sim);
  CHECK(result == std::vector<int>{0, 1});  // 1.03 beats 0.9
}

TEST_CASE("assignment total equals brute force on random matrices") {
  auto g = oracle::rng(41);
  for (int trial = 0; trial < 300; ++trial) {
    const int rows = 1 + static_cast<int>(oracle::uniform(g, 0, 6));
    const int cols = 1 + static_cast<int>(oracle::uniform(g, 0, 6));
    Eigen::MatrixXd sim(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) sim(i, j) = oracle::uniform(g, 0, 1);
    const auto result = solve_assignment(sim);
    double total = 0;
    std::vector<char> used(cols, 0);
    for (int i = 0; i < rows; ++i) {
      if (result[i] >= 0) {
        CHECK(!used[result[i]]);  // one-to-one
        used[result[i]] = 1;
        total += sim(i, result[i]);
      }
    }
    CHECK(total == doctest::Approx(oracle::best_assignment_total(sim)).epsilon(1e-12));
  }
}

TEST_CASE("exact ties resolve toward low indices") {
  Eigen::MatrixXd sim(2, 2);
  sim << 0.5, 0.5, 0.5, 0.5;
  const auto result = solve_assignment(sim);
  CHECK(result == std::vector<int>{0, 1});
}

TEST_CASE("empty matrices") {
  CHECK(solve_assignment(Eigen::MatrixXd(0, 0)).empty());
  CHECK(solve_assignment(Eigen::MatrixXd::Zero(3, 0)) == std::vector<int>{-1, -1, -1});
}

TEST_CASE("rectangular shapes leave extras unmatched") {
  Eigen::MatrixXd sim(3, 1);
  sim << 0.2, 0.9, 0.4;
  const auto result = solve_assignment(sim);
  CHECK(result == std::vector<int>{-1, 0, -1});
}
