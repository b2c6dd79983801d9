#include "pcac/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <random>

#include "json.hpp"
#include "pcac/errors.hpp"
#include "pcac/geometry_io.hpp"
#include "pcac/shapes.hpp"

namespace pcac {

namespace fs = std::filesystem;

std::vector<DatasetEntry> load_split(const fs::path& root, const std::string& split) {
  const fs::path dir = root / split;
  if (!fs::is_directory(dir)) {
    throw DataError("dataset split directory not found: " + dir.string());
  }

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = entry.path().extension().string();
    if (ext == ".ply" || ext == ".xyz" || ext == ".txt") files.push_back(entry.path());
  }
  if (files.empty()) throw DataError("dataset split is empty: " + dir.string());
  std::sort(files.begin(), files.end());

  std::vector<DatasetEntry> out;
  out.reserve(files.size());
  for (const auto& f : files) {
    out.push_back({f.filename().string(), read_point_cloud(f.string())});
  }
  return out;
}

namespace {

ShapeParams randomized_params(ShapeKind kind, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ShapeParams p;
  switch (kind) {
    case ShapeKind::kSphere:
      p.radius = 0.6 + 0.6 * unit(rng);
      break;
    case ShapeKind::kBox:
      p.extent = {0.5 + unit(rng), 0.5 + unit(rng), 0.5 + unit(rng)};
      break;
    case ShapeKind::kTorus:
      p.radius = 0.7 + 0.5 * unit(rng);
      p.minor_radius = p.radius * (0.2 + 0.3 * unit(rng));
      break;
    case ShapeKind::kComposite:
      p.radius = 0.8 + 0.4 * unit(rng);
      break;
  }
  return p;
}

const char* kind_name(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::kSphere: return "sphere";
    case ShapeKind::kBox: return "box";
    case ShapeKind::kTorus: return "torus";
    default: return "composite";
  }
}

}  // namespace

SynthSummary synthesize_dataset(const fs::path& root, const SynthSpec& spec) {
  if (spec.count == 0) throw UsageError("synthesize_dataset: count must be >= 1");
  if (spec.points == 0) throw UsageError("synthesize_dataset: points must be >= 1");

  const bool mixed = spec.kind == "mixed";
  const ShapeKind fixed_kind = mixed ? ShapeKind::kSphere : parse_shape_kind(spec.kind);
  const ShapeKind cycle[4] = {ShapeKind::kSphere, ShapeKind::kBox, ShapeKind::kTorus,
                              ShapeKind::kComposite};

  fs::create_directories(root / "train");
  fs::create_directories(root / "test");

  nlohmann::json manifest;
  manifest["points"] = spec.points;
  manifest["seed"] = spec.seed;
  manifest["files"] = nlohmann::json::array();

  SynthSummary summary;
  for (std::size_t i = 0; i < spec.count; ++i) {
    const ShapeKind kind = mixed ? cycle[i % 4] : fixed_kind;
    const std::uint64_t item_seed = spec.seed * 1000003ull + i;
    std::mt19937_64 param_rng(item_seed);
    const ShapeParams params = randomized_params(kind, param_rng);
    const PointCloud cloud = generate_synthetic_shape(kind, params, spec.points, item_seed);

    // Every tenth item lands in test; small sets still get one test item.
    const bool is_test =
        spec.count >= 10 ? (i % 10 == 9) : (spec.count >= 2 && i + 1 == spec.count);
    const std::string split = is_test ? "test" : "train";
    char name[64];
    std::snprintf(name, sizeof(name), "%s_%04zu.ply", kind_name(kind), i);
    write_point_cloud(cloud, (root / split / name).string(), CloudFormat::kPlyBinaryLE);

    manifest["files"].push_back(
        {{"name", name}, {"split", split}, {"kind", kind_name(kind)}, {"seed", item_seed}});
    (is_test ? summary.n_test : summary.n_train)++;
  }

  std::ofstream mf(root / "dataset.json");
  mf << manifest.dump(2) << "\n";
  return summary;
}

}  // namespace pcac
