#include "pcac/model_io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#include "pcac/errors.hpp"
#include "pcac/serialize.hpp"

namespace pcac {

namespace {

constexpr char kMagic[4] = {'P', 'C', 'A', 'E'};
constexpr std::uint16_t kVersion = 1;

void put_tensor(ByteWriter& w, const std::string& name, const Tensor& t) {
  w.put_string(name);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(t.rank()));
  for (const std::size_t d : t.shape) w.put<std::uint32_t>(static_cast<std::uint32_t>(d));
  for (const double v : t.data) w.put<double>(v);
}

/// Every tensor in the model paired with its serialization name, in file
/// order. Running batch statistics ride along even though they are not
/// trained; inference needs them.
std::vector<std::pair<std::string, Tensor*>> tensor_list(ModelParameters& m) {
  std::vector<std::pair<std::string, Tensor*>> out;
  for (EncoderLayer& l : m.encoder) {
    out.emplace_back(l.w.name, &l.w.value);
    out.emplace_back(l.b.name, &l.b.value);
    if (!l.normalized) continue;
    out.emplace_back(l.gamma.name, &l.gamma.value);
    out.emplace_back(l.beta.name, &l.beta.value);
    out.emplace_back(l.gamma.name.substr(0, l.gamma.name.find('.')) + ".run_mean", &l.run_mean);
    out.emplace_back(l.gamma.name.substr(0, l.gamma.name.find('.')) + ".run_var", &l.run_var);
  }
  for (DecoderLayer& l : m.decoder) {
    out.emplace_back(l.w.name, &l.w.value);
    out.emplace_back(l.b.name, &l.b.value);
  }
  for (Parameter* p : m.density.parameters()) out.emplace_back(p->name, &p->value);
  return out;
}

}  // namespace

std::vector<std::uint8_t> serialize_model(const ModelParameters& model) {
  ByteWriter w;
  w.put_bytes(kMagic, 4);
  w.put<std::uint16_t>(kVersion);
  const ArchitectureConfig& c = model.config;
  w.put<std::uint32_t>(static_cast<std::uint32_t>(c.input_points));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(c.latent_dim));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(c.output_points));
  w.put<std::uint16_t>(static_cast<std::uint16_t>(c.encoder_widths.size()));
  for (const std::size_t width : c.encoder_widths) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(width));
  }
  w.put<std::uint16_t>(static_cast<std::uint16_t>(c.decoder_widths.size()));
  for (const std::size_t width : c.decoder_widths) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(width));
  }
  std::uint8_t flags = 0;
  if (c.activation_on_last_encoder_layer) flags |= 1;
  if (c.batch_norm_before_activation) flags |= 2;
  w.put<std::uint8_t>(flags);
  w.put<double>(model.density.tail_mass());

  auto tensors = tensor_list(const_cast<ModelParameters&>(model));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, tensor] : tensors) put_tensor(w, name, *tensor);

  const std::uint64_t checksum = fnv1a64(w.bytes().data(), w.bytes().size());
  w.put<std::uint64_t>(checksum);
  return w.take();
}

ModelParameters deserialize_model(const std::vector<std::uint8_t>& bytes,
                                  const std::string& origin) {
  if (bytes.size() < 8 + 4) throw FormatError(origin + ": too short to be a model file");
  // Verify the trailing checksum before trusting any field.
  const std::uint64_t stored = [&] {
    std::uint64_t v;
    std::memcpy(&v, bytes.data() + bytes.size() - 8, 8);
    return v;
  }();
  const std::uint64_t actual = fnv1a64(bytes.data(), bytes.size() - 8);
  if (stored != actual) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%016llx != stored %016llx",
                  static_cast<unsigned long long>(actual),
                  static_cast<unsigned long long>(stored));
    throw FormatError(origin + ": checksum mismatch, computed " + buf);
  }

  ByteReader r(bytes.data(), bytes.size() - 8, origin);
  char magic[4];
  r.get_bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw FormatError(origin + ": bad magic (not a model file)");
  }
  const std::uint16_t version = r.get<std::uint16_t>();
  if (version != kVersion) {
    throw FormatError(origin + ": unsupported model version " + std::to_string(version));
  }

  ArchitectureConfig c;
  c.input_points = r.get<std::uint32_t>();
  c.latent_dim = r.get<std::uint32_t>();
  c.output_points = r.get<std::uint32_t>();
  const std::uint16_t n_enc = r.get<std::uint16_t>();
  c.encoder_widths.resize(n_enc);
  for (std::size_t i = 0; i < n_enc; ++i) c.encoder_widths[i] = r.get<std::uint32_t>();
  const std::uint16_t n_dec = r.get<std::uint16_t>();
  c.decoder_widths.resize(n_dec);
  for (std::size_t i = 0; i < n_dec; ++i) c.decoder_widths[i] = r.get<std::uint32_t>();
  const std::uint8_t flags = r.get<std::uint8_t>();
  c.activation_on_last_encoder_layer = (flags & 1) != 0;
  c.batch_norm_before_activation = (flags & 2) != 0;
  const double tail_mass = r.get<double>();
  if (!(tail_mass > 0.0 && tail_mass < 1.0)) {
    throw FormatError(origin + ": tail mass out of range");
  }

  ModelParameters model;
  try {
    model = init_parameters(c, 0);  // structure only; values are overwritten below
  } catch (const DataError& e) {
    throw FormatError(origin + ": inconsistent architecture: " + e.what());
  }

  std::map<std::string, Tensor*> slots;
  for (auto& [name, tensor] : tensor_list(model)) slots.emplace(name, tensor);

  const std::uint32_t count = r.get<std::uint32_t>();
  if (count != slots.size()) {
    throw FormatError(origin + ": expected " + std::to_string(slots.size()) +
                      " tensors, file declares " + std::to_string(count));
  }
  std::map<std::string, bool> seen;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = r.get_string();
    const auto it = slots.find(name);
    if (it == slots.end()) throw FormatError(origin + ": unknown tensor \"" + name + "\"");
    if (seen[name]) throw FormatError(origin + ": duplicate tensor \"" + name + "\"");
    seen[name] = true;

    const std::uint8_t rank = r.get<std::uint8_t>();
    std::vector<std::size_t> shape(rank);
    for (std::size_t d = 0; d < rank; ++d) shape[d] = r.get<std::uint32_t>();
    Tensor& dst = *it->second;
    if (shape != dst.shape) {
      throw FormatError(origin + ": tensor \"" + name + "\" has shape " + shape_str(shape) +
                        ", expected " + shape_str(dst.shape));
    }
    for (double& v : dst.data) v = r.get<double>();
    if (!all_finite(dst)) {
      throw FormatError(origin + ": tensor \"" + name + "\" contains non-finite values");
    }
  }
  if (r.remaining() != 0) {
    throw FormatError(origin + ": " + std::to_string(r.remaining()) +
                      " unexpected trailing bytes before checksum");
  }
  return model;
}

void save_model(const ModelParameters& model, const std::string& path) {
  if (path.empty()) throw DataError("save_model: empty path");
  const std::vector<std::uint8_t> bytes = serialize_model(model);
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

ModelParameters load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path + ": cannot open model file");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return deserialize_model(bytes, path);
}

std::uint64_t model_digest(const ModelParameters& model) {
  const std::vector<std::uint8_t> bytes = serialize_model(model);
  return fnv1a64(bytes.data(), bytes.size());
}

}  // namespace pcac
