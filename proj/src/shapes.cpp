#include "pcac/shapes.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "pcac/errors.hpp"

namespace pcac {

namespace {

Vec3 sub(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }

Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 n = cross(sub(b, a), sub(c, a));
  return 0.5 * std::sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]);
}

}  // namespace

PointCloud sample_mesh_uniform(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed) {
  if (mesh.triangles.empty()) throw DataError("sample_mesh_uniform: mesh has no triangles");

  // Cumulative area table; zero-area triangles contribute nothing and are
  // therefore never selected.
  std::vector<double> cum_area(mesh.triangles.size());
  double total = 0.0;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    total += triangle_area(mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]);
    cum_area[t] = total;
  }
  if (!(total > 0.0)) throw DataError("sample_mesh_uniform: all triangles are degenerate");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  PointCloud out;
  out.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double target = unit(rng) * total;
    const auto it = std::lower_bound(cum_area.begin(), cum_area.end(), target);
    const std::size_t t = std::min<std::size_t>(it - cum_area.begin(), mesh.triangles.size() - 1);
    const auto& tri = mesh.triangles[t];
    const Vec3& a = mesh.vertices[tri[0]];
    const Vec3& b = mesh.vertices[tri[1]];
    const Vec3& c = mesh.vertices[tri[2]];

    // sqrt trick gives a uniform distribution over the triangle interior.
    const double r1 = std::sqrt(unit(rng));
    const double r2 = unit(rng);
    const double wa = 1.0 - r1;
    const double wb = r1 * (1.0 - r2);
    const double wc = r1 * r2;
    out.points.push_back({wa * a[0] + wb * b[0] + wc * c[0],
                          wa * a[1] + wb * b[1] + wc * c[1],
                          wa * a[2] + wb * b[2] + wc * c[2]});
  }
  return out;
}

ShapeKind parse_shape_kind(const std::string& name) {
  if (name == "sphere") return ShapeKind::kSphere;
  if (name == "box") return ShapeKind::kBox;
  if (name == "torus") return ShapeKind::kTorus;
  if (name == "composite") return ShapeKind::kComposite;
  throw UsageError("unknown shape kind: " + name);
}

TriangleMesh make_sphere_mesh(double radius, int segments, int rings) {
  // UV tessellation. 48x24 keeps the chordal deviation from the true sphere
  // under 1% of the radius.
  TriangleMesh mesh;
  const double pi = std::numbers::pi;
  for (int r = 0; r <= rings; ++r) {
    const double phi = pi * r / rings;  // 0 at the north pole
    for (int s = 0; s < segments; ++s) {
      const double theta = 2.0 * pi * s / segments;
      mesh.vertices.push_back({radius * std::sin(phi) * std::cos(theta),
                               radius * std::sin(phi) * std::sin(theta),
                               radius * std::cos(phi)});
    }
  }
  const auto idx = [segments](int r, int s) {
    return static_cast<std::uint32_t>(r * segments + s % segments);
  };
  for (int r = 0; r < rings; ++r) {
    for (int s = 0; s < segments; ++s) {
      // Pole rows produce degenerate triangles; sampling skips them by area.
      mesh.triangles.push_back({idx(r, s), idx(r + 1, s), idx(r + 1, s + 1)});
      mesh.triangles.push_back({idx(r, s), idx(r + 1, s + 1), idx(r, s + 1)});
    }
  }
  return mesh;
}

TriangleMesh make_box_mesh(const Vec3& extent) {
  TriangleMesh mesh;
  const double hx = extent[0] / 2.0, hy = extent[1] / 2.0, hz = extent[2] / 2.0;
  for (int corner = 0; corner < 8; ++corner) {
    mesh.vertices.push_back({(corner & 1) ? hx : -hx,
                             (corner & 2) ? hy : -hy,
                             (corner & 4) ? hz : -hz});
  }
  // Two triangles per face, 12 total. Winding is irrelevant for sampling.
  const std::uint32_t quads[6][4] = {
      {0, 1, 3, 2}, {4, 6, 7, 5},   // z faces
      {0, 4, 5, 1}, {2, 3, 7, 6},   // y faces
      {0, 2, 6, 4}, {1, 5, 7, 3}};  // x faces
  for (const auto& q : quads) {
    mesh.triangles.push_back({q[0], q[1], q[2]});
    mesh.triangles.push_back({q[0], q[2], q[3]});
  }
  return mesh;
}

TriangleMesh make_torus_mesh(double major, double minor, int segments, int rings) {
  TriangleMesh mesh;
  const double pi = std::numbers::pi;
  for (int s = 0; s < segments; ++s) {
    const double u = 2.0 * pi * s / segments;
    for (int r = 0; r < rings; ++r) {
      const double v = 2.0 * pi * r / rings;
      const double w = major + minor * std::cos(v);
      mesh.vertices.push_back({w * std::cos(u), w * std::sin(u), minor * std::sin(v)});
    }
  }
  const auto idx = [segments, rings](int s, int r) {
    return static_cast<std::uint32_t>((s % segments) * rings + r % rings);
  };
  for (int s = 0; s < segments; ++s) {
    for (int r = 0; r < rings; ++r) {
      mesh.triangles.push_back({idx(s, r), idx(s + 1, r), idx(s + 1, r + 1)});
      mesh.triangles.push_back({idx(s, r), idx(s + 1, r + 1), idx(s, r + 1)});
    }
  }
  return mesh;
}

namespace {

TriangleMesh translated(TriangleMesh mesh, const Vec3& offset) {
  for (auto& v : mesh.vertices) {
    v[0] += offset[0];
    v[1] += offset[1];
    v[2] += offset[2];
  }
  return mesh;
}

void append_mesh(TriangleMesh& dst, const TriangleMesh& src) {
  const auto base = static_cast<std::uint32_t>(dst.vertices.size());
  dst.vertices.insert(dst.vertices.end(), src.vertices.begin(), src.vertices.end());
  for (const auto& t : src.triangles) {
    dst.triangles.push_back({t[0] + base, t[1] + base, t[2] + base});
  }
}

TriangleMesh make_composite_mesh(const ShapeParams& params, std::uint64_t seed) {
  // Union of two or three primitives at randomized offsets and sizes. The
  // parts may interpenetrate; that is fine for a surface-sampling corpus.
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> part_count(2, 3);
  std::uniform_int_distribution<int> part_kind(0, 2);

  TriangleMesh mesh;
  const int parts = part_count(rng);
  for (int p = 0; p < parts; ++p) {
    const double size = params.radius * (0.4 + 0.6 * unit(rng));
    const Vec3 offset{params.radius * (unit(rng) - 0.5), params.radius * (unit(rng) - 0.5),
                      params.radius * (unit(rng) - 0.5)};
    TriangleMesh part;
    switch (part_kind(rng)) {
      case 0: part = make_sphere_mesh(size); break;
      case 1: part = make_box_mesh({size * 1.6, size * 1.2, size * 1.4}); break;
      default: part = make_torus_mesh(size, size * 0.35); break;
    }
    append_mesh(mesh, translated(std::move(part), offset));
  }
  return mesh;
}

}  // namespace

PointCloud generate_synthetic_shape(ShapeKind kind, const ShapeParams& params,
                                    std::size_t n, std::uint64_t seed) {
  TriangleMesh mesh;
  switch (kind) {
    case ShapeKind::kSphere: mesh = make_sphere_mesh(params.radius); break;
    case ShapeKind::kBox: mesh = make_box_mesh(params.extent); break;
    case ShapeKind::kTorus: mesh = make_torus_mesh(params.radius, params.minor_radius); break;
    case ShapeKind::kComposite: mesh = make_composite_mesh(params, seed); break;
  }
  return sample_mesh_uniform(mesh, n, seed);
}

}  // namespace pcac
