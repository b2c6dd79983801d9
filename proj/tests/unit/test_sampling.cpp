#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include "doctest.h"
#include "pcac/errors.hpp"
#include "pcac/sampling.hpp"

using namespace pcac;

namespace {

PointCloud random_cloud(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(0.0, 1.0);
  PointCloud pc;
  for (std::size_t i = 0; i < n; ++i) pc.points.push_back({coord(rng), coord(rng), coord(rng)});
  return pc;
}

double min_pairwise_distance(const PointCloud& pc) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pc.size(); ++i) {
    for (std::size_t j = i + 1; j < pc.size(); ++j) {
      const double dx = pc[i][0] - pc[j][0];
      const double dy = pc[i][1] - pc[j][1];
      const double dz = pc[i][2] - pc[j][2];
      best = std::min(best, dx * dx + dy * dy + dz * dz);
    }
  }
  return best;
}

}  // namespace

TEST_CASE("fps hand-run on values 0, 10, 4 along one axis") {
  PointCloud pc;
  pc.points = {{0, 0, 0}, {10, 0, 0}, {4, 0, 0}};
  SampleSpec spec;
  spec.target_count = 3;
  const auto [order, subset] = farthest_point_sample(pc, spec);
  CHECK(order == std::vector<std::size_t>{0, 1, 2});
  CHECK(subset[0] == Vec3{0, 0, 0});
  CHECK(subset[1] == Vec3{10, 0, 0});
  CHECK(subset[2] == Vec3{4, 0, 0});
}

TEST_CASE("fps with target equal to input selects everything") {
  const PointCloud pc = random_cloud(37, 1);
  SampleSpec spec;
  spec.target_count = 37;
  const auto [order, subset] = farthest_point_sample(pc, spec);
  std::set<std::size_t> distinct(order.begin(), order.end());
  CHECK(distinct.size() == 37);
  CHECK(subset.size() == 37);
}

TEST_CASE("fps with target 1 returns the start index") {
  const PointCloud pc = random_cloud(10, 2);
  SampleSpec spec;
  spec.target_count = 1;
  const auto [order, subset] = farthest_point_sample(pc, spec);
  CHECK(order == std::vector<std::size_t>{0});

  spec.start_rule = SampleSpec::StartRule::kSeededRandom;
  spec.seed = 9;
  const auto [order_a, sub_a] = farthest_point_sample(pc, spec);
  const auto [order_b, sub_b] = farthest_point_sample(pc, spec);
  CHECK(order_a == order_b);  // seeded start is deterministic
  CHECK(order_a.size() == 1);
  CHECK(order_a[0] < 10);
}

TEST_CASE("fps tie-break picks the smallest index") {
  PointCloud pc;
  pc.points = {{0, 0, 0}, {-5, 0, 0}, {5, 0, 0}};  // indices 1 and 2 tie from 0
  SampleSpec spec;
  spec.target_count = 3;
  const auto [order, subset] = farthest_point_sample(pc, spec);
  CHECK(order == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("fps output is a subset of input coordinates") {
  const PointCloud pc = random_cloud(200, 3);
  SampleSpec spec;
  spec.target_count = 50;
  const auto [order, subset] = farthest_point_sample(pc, spec);
  for (std::size_t j = 0; j < order.size(); ++j) CHECK(subset[j] == pc[order[j]]);
}

TEST_CASE("fps errors when the target exceeds the cloud") {
  const PointCloud pc = random_cloud(5, 4);
  SampleSpec spec;
  spec.target_count = 6;
  CHECK_THROWS_AS(farthest_point_sample(pc, spec), DataError);
  spec.target_count = 0;
  CHECK_THROWS_AS(farthest_point_sample(pc, spec), DataError);
}

TEST_CASE("fps subsets are more uniform than random subsets") {
  // Compare the minimum pairwise distance of the FPS subset against a
  // uniformly drawn subset of the same size; FPS should win almost always.
  int wins = 0;
  const int trials = 25;
  for (int t = 0; t < trials; ++t) {
    const PointCloud pc = random_cloud(256, 100 + t);
    SampleSpec spec;
    spec.target_count = 32;
    const auto [order, fps_subset] = farthest_point_sample(pc, spec);

    std::mt19937_64 rng(900 + t);
    std::vector<std::size_t> idx(pc.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    PointCloud rand_subset;
    for (std::size_t j = 0; j < 32; ++j) rand_subset.points.push_back(pc[idx[j]]);

    if (min_pairwise_distance(fps_subset) >= min_pairwise_distance(rand_subset)) wins++;
  }
  CHECK(wins >= trials * 95 / 100);
}

TEST_CASE("grid quantize maps a point by floor of scaled shift") {
  PointCloud pc;
  pc.points = {{5.7, 0, 0}};
  const PointCloud out = grid_quantize_merge(pc, {0, 0, 0}, 1.0);
  REQUIRE(out.size() == 1);
  CHECK(out[0] == Vec3{5, 0, 0});
}

TEST_CASE("grid quantize merges points sharing a cell") {
  PointCloud pc;
  pc.points = {{0.1, 0, 0}, {0.4, 0, 0}};
  const PointCloud out = grid_quantize_merge(pc, {0, 0, 0}, 1.0);
  REQUIRE(out.size() == 1);
  CHECK(out[0] == Vec3{0, 0, 0});
}

TEST_CASE("grid quantize output count equals distinct occupied cells") {
  const PointCloud pc = random_cloud(1000, 8);
  const double s = 4.0;
  const PointCloud out = grid_quantize_merge(pc, {0, 0, 0}, s);

  std::set<std::array<long long, 3>> cells;
  for (const auto& p : pc.points) {
    cells.insert({static_cast<long long>(std::floor(p[0] * s)),
                  static_cast<long long>(std::floor(p[1] * s)),
                  static_cast<long long>(std::floor(p[2] * s))});
  }
  CHECK(out.size() == cells.size());
}

TEST_CASE("grid quantize is idempotent on integer clouds at unit scale") {
  PointCloud pc;
  pc.points = {{3, -2, 7}, {0, 0, 0}, {-5, 4, 1}};
  const PointCloud once = grid_quantize_merge(pc, {0, 0, 0}, 1.0);
  const PointCloud twice = grid_quantize_merge(once, {0, 0, 0}, 1.0);
  CHECK(once.points == twice.points);
  CHECK(once.points == pc.points);
}

TEST_CASE("grid quantize rejects non-positive scale") {
  CHECK_THROWS_AS(grid_quantize_merge(random_cloud(3, 1), {0, 0, 0}, 0.0), DataError);
}
