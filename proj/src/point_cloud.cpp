#include "pcac/point_cloud.hpp"

#include <cmath>

#include "pcac/errors.hpp"

namespace pcac {

NormalizationTransform normalize_unit_sphere(const PointCloud& in, PointCloud& out) {
  if (in.empty()) throw DataError("normalize_unit_sphere: empty point cloud");

  NormalizationTransform t;
  const double n = static_cast<double>(in.size());
  Vec3 c{0.0, 0.0, 0.0};
  for (const Vec3& p : in.points) {
    c[0] += p[0];
    c[1] += p[1];
    c[2] += p[2];
  }
  c[0] /= n;
  c[1] /= n;
  c[2] /= n;

  double max_r = 0.0;
  for (const Vec3& p : in.points) {
    const double dx = p[0] - c[0], dy = p[1] - c[1], dz = p[2] - c[2];
    max_r = std::max(max_r, std::sqrt(dx * dx + dy * dy + dz * dz));
  }
  // Degenerate cloud (all points coincide): keep scale 1.
  t.centroid = c;
  t.scale = max_r > 0.0 ? max_r : 1.0;

  out.points.resize(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    out.points[i] = {(in.points[i][0] - c[0]) / t.scale,
                     (in.points[i][1] - c[1]) / t.scale,
                     (in.points[i][2] - c[2]) / t.scale};
  }
  return t;
}

PointCloud denormalize(const PointCloud& pc, const NormalizationTransform& t) {
  PointCloud out;
  out.points.resize(pc.size());
  for (std::size_t i = 0; i < pc.size(); ++i) {
    out.points[i] = {pc.points[i][0] * t.scale + t.centroid[0],
                     pc.points[i][1] * t.scale + t.centroid[1],
                     pc.points[i][2] * t.scale + t.centroid[2]};
  }
  return out;
}

PointCloud apply_expansion(const PointCloud& pc, double factor) {
  if (!(factor > 0.0)) throw DataError("apply_expansion: factor must be positive");
  PointCloud out;
  out.points.resize(pc.size());
  for (std::size_t i = 0; i < pc.size(); ++i) {
    out.points[i] = {pc.points[i][0] * factor, pc.points[i][1] * factor,
                     pc.points[i][2] * factor};
  }
  return out;
}

bool all_points_finite(const PointCloud& pc) {
  for (const Vec3& p : pc.points)
    for (double v : p)
      if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace pcac
