#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pcac/network.hpp"
#include "pcac/point_cloud.hpp"

namespace pcac {

/// Parsed form of one compressed cloud: the fixed header fields plus the
/// range-coded latent payload. On disk everything is little-endian; the byte
/// layout is documented in docs/FORMATS.md.
struct CompressedObject {
  std::uint16_t version = 1;
  std::uint64_t model_digest = 0;    // binds the payload to one model file
  std::uint32_t point_count = 0;     // reconstruction size m
  std::uint16_t latent_dim = 0;      // coded symbols k
  NormalizationTransform transform;  // stored at f32 precision
  std::vector<std::uint8_t> payload;
};

/// Rate bookkeeping for one compress call.
struct CompressStats {
  double table_bits = 0.0;    // ideal code length under the coder's tables
  double density_bits = 0.0;  // the prior's estimate Σ −log2 p(ẑ)
  std::size_t payload_bytes = 0;
};

/// Fixed header size: magic + version + digest + m + k + transform + length.
constexpr std::size_t kBitstreamHeaderBytes = 4 + 2 + 8 + 4 + 2 + 20 + 4;

std::vector<std::uint8_t> serialize_bitstream(const CompressedObject& obj);
CompressedObject parse_bitstream(const std::vector<std::uint8_t>& bytes,
                                 const std::string& origin);

/// Full analysis pipeline: normalize to the unit sphere, farthest-point
/// sample down to the model's input size, expand by `expansion` (the
/// coordinate range the model was trained on), encode in inference mode,
/// round, and range-code under the model's own tables. The payload is
/// decode-verified before returning. Throws DataError when pc has fewer
/// points than the model's tier and UsageError on a bad expansion.
CompressedObject compress(const PointCloud& pc, ModelParameters& model, double expansion,
                          CompressStats* stats = nullptr);

/// Synthesis pipeline: range-decode, run the decoder in inference mode, and
/// return the cloud in the expanded frame (the decoder's native output
/// space). The header transform maps it back to source units if needed.
/// Throws FormatError when the digest does not match `model`.
PointCloud decompress(const CompressedObject& obj, ModelParameters& model);

/// Expanded frame -> original source units: x/expansion·scale + centroid.
PointCloud to_source_units(const PointCloud& expanded, const NormalizationTransform& t);

/// Source units -> expanded frame: (x − centroid)/scale·expansion. Used to
/// lift a reference cloud into the frame decompress outputs.
PointCloud to_expanded_frame(const PointCloud& source, const NormalizationTransform& t);

/// (payload bits [+ header bits]) / original_point_count. The denominator is
/// the pre-downsampling point count of the cloud that was compressed.
double measure_bpp(const CompressedObject& obj, std::size_t original_point_count,
                   bool include_header);

void save_bitstream(const CompressedObject& obj, const std::string& path);
CompressedObject load_bitstream(const std::string& path);

}  // namespace pcac
