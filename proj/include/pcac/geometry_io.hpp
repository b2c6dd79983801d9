#pragma once

#include <filesystem>
#include <string>

#include "pcac/point_cloud.hpp"

namespace pcac {

enum class CloudFormat {
  kPlyAscii,
  kPlyBinaryLE,
  kXyzText,
};

/// Guesses the format from the extension (.ply probes the header for
/// ascii/binary, .xyz/.txt -> XYZ). Throws DataError for anything else.
CloudFormat detect_cloud_format(const std::filesystem::path& path);

/// Reads a point cloud. PLY vertex properties other than x/y/z are skipped;
/// x/y/z may be float32 or float64. Malformed input throws DataError with the
/// offending line (ascii) or byte offset (binary).
PointCloud read_point_cloud(const std::filesystem::path& path, CloudFormat format);
PointCloud read_point_cloud(const std::filesystem::path& path);  // auto-detect

/// Writes a point cloud. Binary PLY stores float64 coordinates and
/// round-trips bit-exactly; text formats carry 9 significant digits.
/// On failure no partial file is left behind.
void write_point_cloud(const PointCloud& pc, const std::filesystem::path& path,
                       CloudFormat format);

}  // namespace pcac
