#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "doctest.h"
#include "pcac/errors.hpp"
#include "pcac/geometry_io.hpp"
#include "pcac/point_cloud.hpp"

namespace fs = std::filesystem;
using namespace pcac;

namespace {

fs::path temp_file(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "pcac_io_tests";
  fs::create_directories(dir);
  return dir / name;
}

PointCloud random_cloud(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(-100.0, 100.0);
  PointCloud pc;
  pc.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) pc.points.push_back({coord(rng), coord(rng), coord(rng)});
  return pc;
}

bool bit_identical(const PointCloud& a, const PointCloud& b) {
  if (a.size() != b.size()) return false;
  return std::memcmp(a.points.data(), b.points.data(), a.size() * sizeof(Vec3)) == 0;
}

}  // namespace

TEST_CASE("xyz file with a single origin line") {
  const fs::path p = temp_file("one.xyz");
  std::ofstream(p) << "0 0 0\n";
  const PointCloud pc = read_point_cloud(p.string());
  REQUIRE(pc.size() == 1);
  CHECK(pc[0] == Vec3{0.0, 0.0, 0.0});
}

TEST_CASE("ascii ply preserves point order") {
  PointCloud pc;
  pc.points = {{1, 2, 3}, {4, 5, 6}, {7, 8, 9}};
  const fs::path p = temp_file("three.ply");
  write_point_cloud(pc, p.string(), CloudFormat::kPlyAscii);
  const PointCloud back = read_point_cloud(p.string());
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    for (int d = 0; d < 3; ++d) CHECK(back[i][d] == doctest::Approx(pc[i][d]).epsilon(1e-6));
  }
}

TEST_CASE("binary ply round-trip is bit-identical over 100 random clouds") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const PointCloud pc = random_cloud(1 + seed % 64, seed);
    const fs::path p = temp_file("rt.ply");
    write_point_cloud(pc, p.string(), CloudFormat::kPlyBinaryLE);
    CHECK(bit_identical(pc, read_point_cloud(p.string())));
  }
}

TEST_CASE("binary ply 2048-point round-trip is bit-identical") {
  const PointCloud pc = random_cloud(2048, 7);
  const fs::path p = temp_file("rt2048.ply");
  write_point_cloud(pc, p.string(), CloudFormat::kPlyBinaryLE);
  CHECK(bit_identical(pc, read_point_cloud(p.string())));
}

TEST_CASE("reader accepts float32 ply and ignores extra attributes") {
  const fs::path p = temp_file("f32extra.ply");
  {
    std::ofstream out(p, std::ios::binary);
    out << "ply\nformat binary_little_endian 1.0\n"
        << "element vertex 2\n"
        << "property float x\nproperty float y\nproperty float z\n"
        << "property uchar red\n"
        << "end_header\n";
    const float v[3] = {1.5f, -2.0f, 3.25f};
    const unsigned char red = 200;
    for (int i = 0; i < 2; ++i) {
      out.write(reinterpret_cast<const char*>(v), sizeof(v));
      out.write(reinterpret_cast<const char*>(&red), 1);
    }
  }
  const PointCloud pc = read_point_cloud(p.string());
  REQUIRE(pc.size() == 2);
  CHECK(pc[1] == Vec3{1.5, -2.0, 3.25});
}

TEST_CASE("write to empty path fails and leaves no partial file") {
  const PointCloud pc = random_cloud(4, 1);
  CHECK_THROWS_AS(write_point_cloud(pc, "", CloudFormat::kPlyBinaryLE), DataError);
  CHECK(!fs::exists(".tmp"));
}

TEST_CASE("malformed header names the offending line") {
  const fs::path p = temp_file("bad_header.ply");
  std::ofstream(p) << "ply\nformat binary_little_endian 1.0\nelement vertex nonsense\n";
  try {
    read_point_cloud(p.string());
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("line") != std::string::npos);
  }
}

TEST_CASE("truncated binary payload names a byte offset") {
  const fs::path p = temp_file("trunc.ply");
  PointCloud pc = random_cloud(10, 3);
  write_point_cloud(pc, p.string(), CloudFormat::kPlyBinaryLE);
  const auto full = fs::file_size(p);
  fs::resize_file(p, full - 5);
  try {
    read_point_cloud(p.string());
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("byte") != std::string::npos);
  }
}

TEST_CASE("non-finite coordinates are rejected") {
  const fs::path p = temp_file("nan.xyz");
  std::ofstream(p) << "0 0 0\n1 nan 2\n";
  CHECK_THROWS_AS(read_point_cloud(p.string()), FormatError);
}

TEST_CASE("normalize symmetric pair onto the unit sphere") {
  PointCloud pc;
  pc.points = {{2, 0, 0}, {-2, 0, 0}};
  PointCloud out;
  const NormalizationTransform t = normalize_unit_sphere(pc, out);
  CHECK(out[0] == Vec3{1.0, 0.0, 0.0});
  CHECK(out[1] == Vec3{-1.0, 0.0, 0.0});
  CHECK(t.centroid == Vec3{0.0, 0.0, 0.0});
  CHECK(t.scale == doctest::Approx(2.0));
}

TEST_CASE("normalize degenerate single point") {
  PointCloud pc;
  pc.points = {{5, 5, 5}};
  PointCloud out;
  const NormalizationTransform t = normalize_unit_sphere(pc, out);
  CHECK(out[0] == Vec3{0.0, 0.0, 0.0});
  CHECK(t.scale == 1.0);
  CHECK(t.centroid == Vec3{5.0, 5.0, 5.0});
}

TEST_CASE("normalized clouds have max norm 1 within 1e-9, and invert") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const PointCloud pc = random_cloud(2048, 1000 + seed);
    PointCloud out;
    const NormalizationTransform t = normalize_unit_sphere(pc, out);
    double max_norm = 0.0;
    for (const auto& p : out.points) {
      max_norm = std::max(max_norm, std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]));
    }
    CHECK(max_norm == doctest::Approx(1.0).epsilon(1e-9));

    const PointCloud back = denormalize(out, t);
    for (std::size_t i = 0; i < pc.size(); ++i) {
      for (int d = 0; d < 3; ++d) {
        CHECK(back[i][d] == doctest::Approx(pc[i][d]).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("expansion scales coordinates") {
  PointCloud pc;
  pc.points = {{1, 0, 0}};
  CHECK(apply_expansion(pc, 1.0)[0] == Vec3{1.0, 0.0, 0.0});
  CHECK(apply_expansion(pc, 1023.0)[0] == Vec3{1023.0, 0.0, 0.0});
  CHECK_THROWS_AS(apply_expansion(pc, 0.0), DataError);

  const PointCloud big = random_cloud(256, 42);
  const PointCloud there = apply_expansion(big, 1023.0);
  const PointCloud back = apply_expansion(there, 1.0 / 1023.0);
  for (std::size_t i = 0; i < big.size(); ++i) {
    for (int d = 0; d < 3; ++d) CHECK(back[i][d] == doctest::Approx(big[i][d]).epsilon(1e-9));
  }
}
