#pragma once

// Local outlier factor: density-ratio score used to discard bad
// depth/mask points before motion fitting. k-nearest-neighbor sets use
// Euclidean (Minkowski order 2) distance with ties broken by point index;
// pairwise distances are clamped to >= 1e-9 m so exact duplicates from
// quantized depth maps cannot produce infinite reachability density.

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "fusetrack/types.hpp"

namespace fusetrack {

inline constexpr double kMinPointDistance = 1e-9;

template <class S>
std::vector<S> local_outlier_factor(const std::vector<Vec3T<S>>& points, int k) {
  const int n = static_cast<int>(points.size());
  if (k < 1) throw std::invalid_argument("local_outlier_factor: k must be >= 1");
  if (n <= k) throw std::invalid_argument("local_outlier_factor: need more than k points");

  // k nearest neighbors per point, selected on (squared distance, index)
  // so ties are deterministic. Small sets use exact pairwise differences;
  // large masks go through a blocked Gram product, whose cancellation
  // error is negligible at mask-point separations.
  std::vector<std::vector<std::pair<S, int>>> neighbors(n);  // (clamped distance, j)
  std::vector<S> k_distance(n);
  std::vector<std::pair<S, int>> row(n - 1);

  const bool blocked = n > 2048;
  Eigen::Matrix<S, Eigen::Dynamic, 3> p;
  Eigen::Matrix<S, Eigen::Dynamic, 1> sq;
  Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic> gram;
  if (blocked) {
    p.resize(n, 3);
    for (int i = 0; i < n; ++i) p.row(i) = points[i].transpose();
    sq = p.rowwise().squaredNorm();
  }

  const int block = blocked ? 512 : n;
  for (int r0 = 0; r0 < n; r0 += block) {
    const int b = std::min(block, n - r0);
    if (blocked) gram.noalias() = p.middleRows(r0, b) * p.transpose();  // b x n
    for (int li = 0; li < b; ++li) {
      const int i = r0 + li;
      int m = 0;
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        const S d2 = blocked ? std::max(S(0), sq[i] + sq[j] - 2 * gram(li, j))
                             : S((points[i] - points[j]).squaredNorm());
        row[m++] = {d2, j};
      }
      std::nth_element(row.begin(), row.begin() + (k - 1), row.end());
      auto& nbh = neighbors[i];
      nbh.resize(k);
      S kd = S(0);
      for (int t = 0; t < k; ++t) {
        const S d = std::max(S(kMinPointDistance), std::sqrt(row[t].first));
        nbh[t] = {d, row[t].second};
        kd = std::max(kd, d);
      }
      k_distance[i] = kd;
    }
  }

  std::vector<S> lrd(n);
  for (int i = 0; i < n; ++i) {
    S sum = 0;
    for (const auto& [d, j] : neighbors[i]) sum += std::max(k_distance[j], d);
    lrd[i] = S(k) / sum;
  }

  std::vector<S> lof(n);
  for (int i = 0; i < n; ++i) {
    S sum = 0;
    for (const auto& [d, j] : neighbors[i]) sum += lrd[j];
    lof[i] = sum / (S(k) * lrd[i]);
  }
  return lof;
}

template <class S>
S median_of(std::vector<S> values) {
  if (values.empty()) throw std::invalid_argument("median_of: empty");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return (values[n / 2 - 1] + values[n / 2]) / S(2);
}

}  // namespace fusetrack
