#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pcac/point_cloud.hpp"

namespace pcac {

/// A dataset is a directory with one subdirectory per split, each holding
/// point-cloud files: <root>/<split>/<name>.ply
struct DatasetEntry {
  std::string name;  // filename without directory
  PointCloud cloud;
};

/// Loads every recognized cloud file in <root>/<split>/, sorted by filename.
/// Throws DataError if the split directory is missing or empty.
std::vector<DatasetEntry> load_split(const std::filesystem::path& root, const std::string& split);

struct SynthSpec {
  std::string kind = "mixed";  // sphere | box | torus | composite | mixed
  std::size_t count = 10;
  std::size_t points = 2048;
  std::uint64_t seed = 0;
};

struct SynthSummary {
  std::size_t n_train = 0;
  std::size_t n_test = 0;
};

/// Generates `count` synthetic shapes with per-item randomized parameters and
/// writes them as binary PLY under <root>/train and <root>/test with a 90/10
/// split (every tenth item goes to test). A split manifest listing each file's
/// shape kind and seed is written to <root>/dataset.json.
SynthSummary synthesize_dataset(const std::filesystem::path& root, const SynthSpec& spec);

}  // namespace pcac
