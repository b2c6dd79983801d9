#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pcac/network.hpp"

namespace pcac {

/// Serializes the full model (architecture description, every weight tensor,
/// and the learned density parameters) into the binary container documented in
/// docs/FORMATS.md. The layout is little-endian with a trailing FNV-1a-64
/// checksum, so a load can detect any single corrupted byte.
std::vector<std::uint8_t> serialize_model(const ModelParameters& model);

ModelParameters deserialize_model(const std::vector<std::uint8_t>& bytes,
                                  const std::string& origin);

void save_model(const ModelParameters& model, const std::string& path);
ModelParameters load_model(const std::string& path);

/// Digest over the serialized bytes; embedded in bitstreams so a decoder can
/// refuse payloads produced by a different model.
std::uint64_t model_digest(const ModelParameters& model);

}  // namespace pcac
