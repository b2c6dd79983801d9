#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace pcac {

using Vec3 = std::array<double, 3>;

/// Ordered list of 3D points. Order is significant for I/O round trips.
struct PointCloud {
  std::vector<Vec3> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  Vec3& operator[](std::size_t i) { return points[i]; }
  const Vec3& operator[](std::size_t i) const { return points[i]; }
};

/// Maps a cloud into the unit sphere and back. `expansion` is the scale
/// applied after decoding so metrics run on a voxel-like coordinate range.
struct NormalizationTransform {
  Vec3 centroid{0.0, 0.0, 0.0};
  double scale = 1.0;       // bounding-sphere radius before normalization
  double expansion = 1.0;   // post-decode scale factor
};

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> triangles;
};

/// Centers `pc` on its centroid and scales so the farthest point sits on the
/// unit sphere. A cloud whose points all coincide keeps scale 1 and maps to
/// the origin, so the transform stays invertible.
NormalizationTransform normalize_unit_sphere(const PointCloud& in, PointCloud& out);

/// Inverse of normalize_unit_sphere: x*scale + centroid.
PointCloud denormalize(const PointCloud& pc, const NormalizationTransform& t);

/// Multiplies every coordinate by `factor`. factor must be > 0.
PointCloud apply_expansion(const PointCloud& pc, double factor);

/// True if every coordinate is finite.
bool all_points_finite(const PointCloud& pc);

}  // namespace pcac
