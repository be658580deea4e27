#include "fusetrack/assignment.hpp"

#include <limits>

namespace fusetrack {

namespace {

// Shortest-augmenting-path solve of the square min-cost assignment problem.
// Deterministic: rows are processed and ties scanned in increasing index
// order.
std::vector<int> min_cost_assignment(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based potentials, column 0 is a virtual source.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> match_col(n + 1, 0);  // match_col[j] = row matched to column j
  std::vector<int> way(n + 1, 0);

  for (int i = 1; i <= n; ++i) {
    match_col[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, false);
    do {
      used[j0] = true;
      const int i0 = match_col[j0];
      double delta = inf;
      int j1 = -1;
      for (int j = 1; j <= n; ++j) {
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
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match_col[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match_col[j0] != 0);
    do {
      const int j1 = way[j0];
      match_col[j0] = match_col[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j)
    if (match_col[j] >= 1) row_to_col[match_col[j] - 1] = j - 1;
  return row_to_col;
}

}  // namespace

std::vector<int> solve_assignment(const Eigen::MatrixXd& similarity) {
  const int rows = static_cast<int>(similarity.rows());
  const int cols = static_cast<int>(similarity.cols());
  std::vector<int> result(rows, -1);
  if (rows == 0 || cols == 0) return result;

  // Pad to square; dummy entries have similarity 0, same as "unmatched".
  const int n = std::max(rows, cols);
  Eigen::MatrixXd cost = Eigen::MatrixXd::Zero(n, n);
  double max_sim = 0.0;
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) max_sim = std::max(max_sim, similarity(i, j));
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) cost(i, j) = max_sim - similarity(i, j);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i >= rows || j >= cols) cost(i, j) = max_sim;

  std::vector<int> assign = min_cost_assignment(cost);
  for (int i = 0; i < rows; ++i)
    if (assign[i] >= 0 && assign[i] < cols) result[i] = assign[i];

  // Canonicalize exact ties: swap assigned columns between row pairs when
  // the total is unchanged and the swap lowers (row, column) order.
  bool changed = true;
  while (changed) {
    changed = false;
    for (int i = 0; i < rows; ++i) {
      if (result[i] < 0) continue;
      for (int j = i + 1; j < rows; ++j) {
        if (result[j] < 0) continue;
        const int a = result[i], b = result[j];
        if (b < a && similarity(i, b) + similarity(j, a) == similarity(i, a) + similarity(j, b)) {
          result[i] = b;
          result[j] = a;
          changed = true;
        }
      }
    }
  }
  return result;
}

}  // namespace fusetrack
