#pragma once

#include <cstdint>
#include <string>

#include "pcac/point_cloud.hpp"

namespace pcac {

/// Draws n points uniformly by area over the mesh surface. Triangle choice is
/// proportional to area; degenerate (zero-area) triangles are skipped.
/// Deterministic given seed. Throws DataError if every triangle is degenerate.
PointCloud sample_mesh_uniform(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed);

enum class ShapeKind { kSphere, kBox, kTorus, kComposite };

ShapeKind parse_shape_kind(const std::string& name);  // throws UsageError

struct ShapeParams {
  double radius = 1.0;                  // sphere / torus major radius
  double minor_radius = 0.35;           // torus tube radius
  Vec3 extent{1.0, 1.0, 1.0};           // box edge lengths
  // Composite shapes draw their own sub-shape parameters from the seed.
};

/// Builds a triangulated surface for the requested shape and samples n points
/// on it. Deterministic given (kind, params, n, seed).
PointCloud generate_synthetic_shape(ShapeKind kind, const ShapeParams& params,
                                    std::size_t n, std::uint64_t seed);

/// Tessellations used by generate_synthetic_shape, exposed for tests.
TriangleMesh make_sphere_mesh(double radius, int segments = 48, int rings = 24);
TriangleMesh make_box_mesh(const Vec3& extent);
TriangleMesh make_torus_mesh(double major, double minor, int segments = 48, int rings = 24);

}  // namespace pcac
