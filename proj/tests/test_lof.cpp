#include <doctest.h>

#include "fusetrack/fusion.hpp"
#include "fusetrack/lof.hpp"
#include "oracles.hpp"

using namespace fusetrack;

namespace {

ObjectPoints as_object_points(const std::vector<Vec3>& pts) {
  ObjectPoints op;
  op.frame = 0;
  op.points = pts;
  for (int i = 0; i < static_cast<int>(pts.size()); ++i) op.pixels.emplace_back(i, 0);
  return op;
}

}  // namespace

TEST_CASE("interior lattice point has LOF exactly 1") {
  std::vector<Vec3> pts;
  for (int i = 0; i <= 10; ++i) pts.emplace_back(i, 0, 0);
  const auto lof = local_outlier_factor<double>(pts, 2);
  const auto ref = oracle::lof_brute_force(pts, 2);
  CHECK(lof[5] == doctest::Approx(1.0).epsilon(1e-12));
  for (std::size_t i = 0; i < pts.size(); ++i)
    CHECK(lof[i] == doctest::Approx(ref[i]).epsilon(1e-12));
}

TEST_CASE("a far outlier scores much higher than the cluster") {
  auto g = oracle::rng(4);
  std::vector<Vec3> pts;
  for (int i = 0; i < 10; ++i)
    pts.emplace_back(oracle::uniform(g, 0, 1), oracle::uniform(g, 0, 1),
                     oracle::uniform(g, 0, 1));
  pts.emplace_back(173.0, 0, 0);  // ~100x the cluster diameter away
  const auto lof = local_outlier_factor<double>(pts, 3);
  const auto ref = oracle::lof_brute_force(pts, 3);
  for (std::size_t i = 0; i < pts.size(); ++i)
    CHECK(lof[i] == doctest::Approx(ref[i]).epsilon(1e-9));
  std::vector<double> cluster(lof.begin(), lof.end() - 1);
  CHECK(lof.back() >= 10.0 * median_of(cluster));
}

TEST_CASE("near-duplicate points stay bounded through the distance clamp") {
  std::vector<Vec3> pts;
  for (int i = 0; i < 8; ++i) pts.emplace_back(1e-9 * i, 0, 0);
  const auto lof = local_outlier_factor<double>(pts, 3);
  const auto ref = oracle::lof_brute_force(pts, 3);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CHECK(lof[i] == doctest::Approx(ref[i]).epsilon(1e-9));
    CHECK(lof[i] >= 0.5);
    CHECK(lof[i] <= 2.0);
  }
}

TEST_CASE("LOF matches the brute-force reference on random point sets") {
  auto g = oracle::rng(99);
  for (int trial = 0; trial < 60; ++trial) {
    const int k = 2 + static_cast<int>(oracle::uniform(g, 0, 5));
    const int n = k + 2 + static_cast<int>(oracle::uniform(g, 0, 98 - k));
    std::vector<Vec3> pts;
    for (int i = 0; i < n; ++i)
      pts.emplace_back(oracle::uniform(g, -5, 5), oracle::uniform(g, -5, 5),
                       oracle::uniform(g, -5, 5));
    const auto lof = local_outlier_factor<double>(pts, k);
    const auto ref = oracle::lof_brute_force(pts, k);
    for (int i = 0; i < n; ++i) CHECK(std::abs(lof[i] - ref[i]) < 1e-9);
  }
}

TEST_CASE("LOF rejects too-few points") {
  std::vector<Vec3> pts = {Vec3(0, 0, 0), Vec3(1, 0, 0)};
  CHECK_THROWS_AS(local_outlier_factor<double>(pts, 2), std::invalid_argument);
  CHECK_THROWS_AS(local_outlier_factor<double>(pts, 0), std::invalid_argument);
}

TEST_CASE("filter_points keeps a symmetric cluster intact") {
  // Vertices of a cube: all LOF equal by symmetry, nothing above median.
  std::vector<Vec3> pts;
  for (const double x : {0.0, 1.0})
    for (const double y : {0.0, 1.0})
      for (const double z : {0.0, 1.0}) pts.emplace_back(x, y, z);
  const auto filtered = filter_points(as_object_points(pts), 3);
  REQUIRE(filtered.has_value());
  CHECK(filtered->size() == pts.size());
}

TEST_CASE("filter_points removes an extreme outlier") {
  auto g = oracle::rng(13);
  std::vector<Vec3> pts;
  for (int i = 0; i < 12; ++i)
    pts.emplace_back(oracle::uniform(g, 0, 1), oracle::uniform(g, 0, 1),
                     oracle::uniform(g, 0, 1));
  pts.emplace_back(500, 0, 0);
  const auto filtered = filter_points(as_object_points(pts), 4);
  REQUIRE(filtered.has_value());
  for (const Vec3& p : filtered->points) CHECK(p.x() < 100);
  // Median rule keeps at least half the points.
  CHECK(filtered->size() * 2 >= pts.size());
}

TEST_CASE("filter_points flags too-small sets as unfit") {
  std::vector<Vec3> pts = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0)};
  CHECK(!filter_points(as_object_points(pts), 2).has_value());
}

TEST_CASE("filter_points retains at least half on random sets") {
  auto g = oracle::rng(71);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 10 + static_cast<int>(oracle::uniform(g, 0, 50));
    std::vector<Vec3> pts;
    for (int i = 0; i < n; ++i)
      pts.emplace_back(oracle::uniform(g, -3, 3), oracle::uniform(g, -3, 3),
                       oracle::uniform(g, -3, 3));
    const auto filtered = filter_points(as_object_points(pts), 4);
    REQUIRE(filtered.has_value());
    CHECK(filtered->size() * 2 >= static_cast<std::size_t>(n));
    CHECK(filtered->size() >= 1);
  }
}
