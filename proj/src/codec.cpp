#include "pcac/codec.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>

#include "pcac/cdf_table.hpp"
#include "pcac/errors.hpp"
#include "pcac/model_io.hpp"
#include "pcac/quantization.hpp"
#include "pcac/range_coder.hpp"
#include "pcac/sampling.hpp"
#include "pcac/serialize.hpp"

namespace pcac {

namespace {

constexpr char kMagic[4] = {'P', 'C', 'C', 'B'};
constexpr std::uint16_t kVersion = 1;

double f32(double v) { return static_cast<double>(static_cast<float>(v)); }

void check_transform(const NormalizationTransform& t, const std::string& origin) {
  const bool finite = std::isfinite(t.centroid[0]) && std::isfinite(t.centroid[1]) &&
                      std::isfinite(t.centroid[2]) && std::isfinite(t.scale) &&
                      std::isfinite(t.expansion);
  if (!finite || t.scale <= 0.0 || t.expansion <= 0.0) {
    throw FormatError(origin + ": corrupt normalization transform");
  }
}

}  // namespace

std::vector<std::uint8_t> serialize_bitstream(const CompressedObject& obj) {
  ByteWriter w;
  w.put_bytes(kMagic, sizeof(kMagic));
  w.put<std::uint16_t>(obj.version);
  w.put<std::uint64_t>(obj.model_digest);
  w.put<std::uint32_t>(obj.point_count);
  w.put<std::uint16_t>(obj.latent_dim);
  for (int c = 0; c < 3; ++c) w.put<float>(static_cast<float>(obj.transform.centroid[c]));
  w.put<float>(static_cast<float>(obj.transform.scale));
  w.put<float>(static_cast<float>(obj.transform.expansion));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(obj.payload.size()));
  w.put_bytes(obj.payload.data(), obj.payload.size());
  return w.take();
}

CompressedObject parse_bitstream(const std::vector<std::uint8_t>& bytes,
                                 const std::string& origin) {
  ByteReader r(bytes.data(), bytes.size(), origin);
  char magic[4];
  r.get_bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw FormatError(origin + ": bad magic (not a bitstream file)");
  }
  CompressedObject obj;
  obj.version = r.get<std::uint16_t>();
  if (obj.version != kVersion) {
    throw FormatError(origin + ": unsupported bitstream version " +
                      std::to_string(obj.version));
  }
  obj.model_digest = r.get<std::uint64_t>();
  obj.point_count = r.get<std::uint32_t>();
  obj.latent_dim = r.get<std::uint16_t>();
  for (int c = 0; c < 3; ++c) obj.transform.centroid[c] = r.get<float>();
  obj.transform.scale = r.get<float>();
  obj.transform.expansion = r.get<float>();
  if (obj.point_count == 0 || obj.latent_dim == 0) {
    throw FormatError(origin + ": empty reconstruction or latent in header");
  }
  check_transform(obj.transform, origin);
  const std::uint32_t payload_len = r.get<std::uint32_t>();
  obj.payload.resize(payload_len);
  if (payload_len > 0) r.get_bytes(obj.payload.data(), payload_len);
  if (r.remaining() != 0) {
    throw FormatError(origin + ": trailing bytes after payload");
  }
  return obj;
}

CompressedObject compress(const PointCloud& pc, ModelParameters& model, double expansion,
                          CompressStats* stats) {
  if (!(std::isfinite(expansion) && expansion > 0.0)) {
    throw UsageError("compress: expansion factor must be positive");
  }
  if (pc.empty()) throw DataError("compress: empty point cloud");
  if (!all_points_finite(pc)) throw DataError("compress: non-finite coordinates");
  const std::size_t tier_n = model.config.input_points;
  if (pc.size() < tier_n) {
    throw DataError("compress: cloud has " + std::to_string(pc.size()) +
                    " points, below the model tier of " + std::to_string(tier_n));
  }

  PointCloud normalized;
  NormalizationTransform t = normalize_unit_sphere(pc, normalized);
  t.expansion = expansion;
  // Store the transform at the f32 precision the header carries, so the
  // in-memory object and its parsed round trip are identical.
  for (int c = 0; c < 3; ++c) t.centroid[c] = f32(t.centroid[c]);
  t.scale = f32(t.scale);
  t.expansion = f32(t.expansion);

  SampleSpec spec;
  spec.target_count = tier_n;
  PointCloud sampled = farthest_point_sample(normalized, spec).second;
  const PointCloud expanded = apply_expansion(sampled, expansion);

  const Tensor z = encode_infer(model, expanded);
  SymbolStream stream;
  stream.symbols.resize(z.numel());
  std::vector<double> zhat(z.numel());
  for (std::size_t i = 0; i < z.numel(); ++i) {
    const double r = round_half_away(z.data[i]);
    if (!(std::abs(r) <= 2147483647.0)) {
      throw NumericError("compress: latent channel " + std::to_string(i) +
                         " rounds outside the coder's 32-bit range");
    }
    stream.symbols[i] = static_cast<long long>(r);
    zhat[i] = r;
  }

  const CdfTableSet tables = build_cdf_tables(model.density);
  CompressedObject obj;
  obj.model_digest = model_digest(model);
  obj.point_count = static_cast<std::uint32_t>(model.config.output_points);
  obj.latent_dim = static_cast<std::uint16_t>(model.config.latent_dim);
  obj.transform = t;
  obj.payload = range_encode(stream, tables);

  // The coder must hand the decoder the exact rounded latent; verify on
  // every compression rather than trusting it.
  const SymbolStream check =
      range_decode(obj.payload.data(), obj.payload.size(), tables, stream.symbols.size());
  if (check.symbols != stream.symbols) {
    throw NumericError("compress: payload failed decode verification");
  }

  if (stats != nullptr) {
    stats->table_bits = table_code_bits(stream, tables);
    stats->density_bits = model.density.rate_bits(zhat);
    stats->payload_bytes = obj.payload.size();
  }
  return obj;
}

PointCloud decompress(const CompressedObject& obj, ModelParameters& model) {
  if (obj.model_digest != model_digest(model)) {
    throw FormatError("decompress: model digest mismatch (bitstream was made with a "
                      "different model)");
  }
  if (obj.latent_dim != model.config.latent_dim ||
      obj.point_count != model.config.output_points) {
    throw FormatError("decompress: header sizes disagree with the model");
  }
  const CdfTableSet tables = build_cdf_tables(model.density);
  const SymbolStream stream =
      range_decode(obj.payload.data(), obj.payload.size(), tables, obj.latent_dim);
  Tensor latent({static_cast<std::size_t>(obj.latent_dim)});
  for (std::size_t i = 0; i < latent.numel(); ++i) {
    latent.data[i] = static_cast<double>(stream.symbols[i]);
  }
  return decode_infer(model, latent);
}

PointCloud to_source_units(const PointCloud& expanded, const NormalizationTransform& t) {
  PointCloud out;
  out.points.reserve(expanded.size());
  const double back = t.scale / t.expansion;
  for (const Vec3& p : expanded.points) {
    out.points.push_back({p[0] * back + t.centroid[0], p[1] * back + t.centroid[1],
                          p[2] * back + t.centroid[2]});
  }
  return out;
}

PointCloud to_expanded_frame(const PointCloud& source, const NormalizationTransform& t) {
  PointCloud out;
  out.points.reserve(source.size());
  const double fwd = t.expansion / t.scale;
  for (const Vec3& p : source.points) {
    out.points.push_back({(p[0] - t.centroid[0]) * fwd, (p[1] - t.centroid[1]) * fwd,
                          (p[2] - t.centroid[2]) * fwd});
  }
  return out;
}

double measure_bpp(const CompressedObject& obj, std::size_t original_point_count,
                   bool include_header) {
  if (original_point_count == 0) {
    throw UsageError("measure_bpp: original point count must be positive");
  }
  double bits = 8.0 * static_cast<double>(obj.payload.size());
  if (include_header) bits += 8.0 * static_cast<double>(kBitstreamHeaderBytes);
  return bits / static_cast<double>(original_point_count);
}

void save_bitstream(const CompressedObject& obj, const std::string& path) {
  if (path.empty()) throw DataError("save_bitstream: empty path");
  const std::vector<std::uint8_t> bytes = serialize_bitstream(obj);
  namespace fs = std::filesystem;
  fs::path tmp = fs::path(path);
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw DataError(path + ": write failed");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw DataError(path + ": rename failed: " + ec.message());
  }
}

CompressedObject load_bitstream(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path + ": cannot open bitstream file");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return parse_bitstream(bytes, path);
}

}  // namespace pcac
