#include "pcac/sampling.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <unordered_map>

#include "pcac/errors.hpp"

namespace pcac {

namespace {

double squared_distance(const Vec3& a, const Vec3& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return dx * dx + dy * dy + dz * dz;
}

}  // namespace

std::pair<std::vector<std::size_t>, PointCloud> farthest_point_sample(const PointCloud& pc,
                                                                      const SampleSpec& spec) {
  const std::size_t n = pc.size();
  const std::size_t m = spec.target_count;
  if (m == 0 || m > n) {
    throw DataError("farthest_point_sample: target_count " + std::to_string(m) +
                    " out of range for cloud of " + std::to_string(n));
  }

  std::size_t start = 0;
  if (spec.start_rule == SampleSpec::StartRule::kSeededRandom) {
    std::mt19937_64 rng(spec.seed);
    start = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  }

  // min_dist[i] = squared distance from point i to the selected set so far.
  std::vector<double> min_dist(n, std::numeric_limits<double>::infinity());
  std::vector<char> selected(n, 0);
  std::vector<std::size_t> order;
  order.reserve(m);

  std::size_t current = start;
  for (std::size_t j = 0; j < m; ++j) {
    order.push_back(current);
    selected[current] = 1;
    if (j + 1 == m) break;

    std::size_t best = n;
    double best_dist = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (selected[i]) continue;
      const double d = squared_distance(pc[i], pc[current]);
      if (d < min_dist[i]) min_dist[i] = d;
      // Strict > keeps the smallest index on ties.
      if (min_dist[i] > best_dist) {
        best_dist = min_dist[i];
        best = i;
      }
    }
    current = best;
  }

  PointCloud subset;
  subset.points.reserve(m);
  for (const std::size_t i : order) subset.points.push_back(pc[i]);
  return {std::move(order), std::move(subset)};
}

PointCloud grid_quantize_merge(const PointCloud& pc, const Vec3& shift, double s) {
  if (!(s > 0.0)) throw DataError("grid_quantize_merge: scale must be positive");

  struct CellHash {
    std::size_t operator()(const std::array<long long, 3>& c) const {
      std::size_t h = 1469598103934665603ull;
      for (const long long v : c) {
        h ^= static_cast<std::size_t>(v);
        h *= 1099511628211ull;
      }
      return h;
    }
  };

  std::unordered_map<std::array<long long, 3>, char, CellHash> seen;
  seen.reserve(pc.size());

  PointCloud out;
  for (const auto& p : pc.points) {
    const std::array<long long, 3> cell = {
        static_cast<long long>(std::floor((p[0] - shift[0]) * s)),
        static_cast<long long>(std::floor((p[1] - shift[1]) * s)),
        static_cast<long long>(std::floor((p[2] - shift[2]) * s))};
    if (seen.emplace(cell, 1).second) {
      out.points.push_back({static_cast<double>(cell[0]), static_cast<double>(cell[1]),
                            static_cast<double>(cell[2])});
    }
  }
  return out;
}

}  // namespace pcac
