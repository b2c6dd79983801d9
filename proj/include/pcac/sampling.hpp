#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "pcac/point_cloud.hpp"

namespace pcac {

struct SampleSpec {
  std::size_t target_count = 1;
  enum class StartRule { kFixedIndexZero, kSeededRandom } start_rule = StartRule::kFixedIndexZero;
  std::uint64_t seed = 0;
};

/// Iterative farthest point sampling. After the start point, each step picks
/// the unselected point whose distance to the selected set is largest, ties
/// broken by smallest index. Returns the selection order and the subset cloud.
/// Throws DataError if target_count is 0 or exceeds the input size.
std::pair<std::vector<std::size_t>, PointCloud> farthest_point_sample(const PointCloud& pc,
                                                                      const SampleSpec& spec);

/// Maps each point to floor((X - shift) * s) per coordinate and merges
/// duplicate cells, keeping first-occurrence order. Output coordinates are
/// integer-valued.
PointCloud grid_quantize_merge(const PointCloud& pc, const Vec3& shift, double s);

}  // namespace pcac
