#include "pcac/network.hpp"

#include <cmath>

#include "pcac/errors.hpp"

namespace pcac {

ArchitectureConfig ArchitectureConfig::resolved() const {
  ArchitectureConfig r = *this;
  if (r.input_points == 0 || r.latent_dim == 0) {
    throw DataError("ArchitectureConfig: input_points and latent_dim must be positive");
  }
  if (r.output_points == 0) r.output_points = r.input_points;
  if (r.encoder_widths.empty()) r.encoder_widths = {64, 128, 128, 256, r.latent_dim};
  if (r.decoder_widths.empty()) r.decoder_widths = {256, 256, 3 * r.output_points};
  for (const std::size_t w : r.encoder_widths) {
    if (w == 0) throw DataError("ArchitectureConfig: zero encoder width");
  }
  for (const std::size_t w : r.decoder_widths) {
    if (w == 0) throw DataError("ArchitectureConfig: zero decoder width");
  }
  if (r.encoder_widths.back() != r.latent_dim) {
    throw DataError("ArchitectureConfig: last encoder width " +
                    std::to_string(r.encoder_widths.back()) + " != latent_dim " +
                    std::to_string(r.latent_dim));
  }
  if (r.decoder_widths.back() != 3 * r.output_points) {
    throw DataError("ArchitectureConfig: last decoder width " +
                    std::to_string(r.decoder_widths.back()) + " != 3*output_points " +
                    std::to_string(3 * r.output_points));
  }
  return r;
}

ArchitectureConfig tier_config(std::size_t input_points) {
  ArchitectureConfig c;
  c.input_points = input_points;
  switch (input_points) {
    case 2048: c.latent_dim = 512; break;
    case 1024: c.latent_dim = 256; break;
    case 512: c.latent_dim = 128; break;
    case 256: c.latent_dim = 64; break;
    case 128: c.latent_dim = 32; break;
    default:
      throw UsageError("no tier preset for " + std::to_string(input_points) +
                       " points (tiers: 2048, 1024, 512, 256, 128)");
  }
  return c.resolved();
}

std::vector<Parameter*> ModelParameters::trainable() {
  std::vector<Parameter*> out;
  for (EncoderLayer& l : encoder) {
    out.push_back(&l.w);
    out.push_back(&l.b);
    if (l.normalized) {
      out.push_back(&l.gamma);
      out.push_back(&l.beta);
    }
  }
  for (DecoderLayer& l : decoder) {
    out.push_back(&l.w);
    out.push_back(&l.b);
  }
  for (Parameter* p : density.parameters()) out.push_back(p);
  return out;
}

std::vector<const Parameter*> ModelParameters::trainable() const {
  auto mutable_list = const_cast<ModelParameters*>(this)->trainable();
  return {mutable_list.begin(), mutable_list.end()};
}

ModelParameters init_parameters(const ArchitectureConfig& config, std::uint64_t seed) {
  ModelParameters m;
  m.config = config.resolved();
  std::mt19937_64 rng(seed);

  const auto uniform_fan_in = [&rng](std::size_t fan_in, Tensor& t) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& v : t.data) v = dist(rng);
  };

  std::size_t in_width = 3;
  for (std::size_t i = 0; i < m.config.encoder_widths.size(); ++i) {
    const std::size_t out_width = m.config.encoder_widths[i];
    EncoderLayer layer;
    const std::string tag = "enc" + std::to_string(i);
    Tensor w({in_width, out_width});
    uniform_fan_in(in_width, w);
    layer.w = Parameter(tag + ".w", std::move(w));
    layer.b = Parameter(tag + ".b", Tensor({out_width}));
    layer.gamma = Parameter(tag + ".gamma", Tensor({out_width}, std::vector<double>(out_width, 1.0)));
    layer.beta = Parameter(tag + ".beta", Tensor({out_width}));
    layer.run_mean = Tensor({out_width});
    layer.run_var = Tensor({out_width}, std::vector<double>(out_width, 1.0));
    const bool last = i + 1 == m.config.encoder_widths.size();
    layer.normalized = !last || m.config.activation_on_last_encoder_layer;
    m.encoder.push_back(std::move(layer));
    in_width = out_width;
  }

  in_width = m.config.latent_dim;
  for (std::size_t i = 0; i < m.config.decoder_widths.size(); ++i) {
    const std::size_t out_width = m.config.decoder_widths[i];
    DecoderLayer layer;
    const std::string tag = "dec" + std::to_string(i);
    Tensor w({in_width, out_width});
    uniform_fan_in(in_width, w);
    layer.w = Parameter(tag + ".w", std::move(w));
    layer.b = Parameter(tag + ".b", Tensor({out_width}));
    m.decoder.push_back(std::move(layer));
    in_width = out_width;
  }

  m.density = FactorizedDensity(m.config.latent_dim, rng);
  return m;
}

Var encode_op(Tape& t, ModelParameters& params, Var points, bool train) {
  const Tensor& x = t.value(points);
  if (x.rank() != 2 || x.dim(1) != 3 || x.dim(0) != params.config.input_points) {
    throw DataError("encode: expected [" + std::to_string(params.config.input_points) +
                    ", 3] points, got " + shape_str(x.shape));
  }
  Var h = points;
  for (EncoderLayer& layer : params.encoder) {
    h = t.linear(h, t.param(layer.w), t.param(layer.b));
    if (!layer.normalized) continue;  // bare final layer
    if (params.config.batch_norm_before_activation) {
      h = t.relu(t.batch_norm(h, t.param(layer.gamma), t.param(layer.beta), layer.run_mean,
                              layer.run_var, train));
    } else {
      h = t.batch_norm(t.relu(h), t.param(layer.gamma), t.param(layer.beta), layer.run_mean,
                       layer.run_var, train);
    }
  }
  return t.max_pool_points(h);
}

Var decode_op(Tape& t, ModelParameters& params, Var latent, bool train) {
  (void)train;
  const Tensor& z = t.value(latent);
  if (z.numel() != params.config.latent_dim) {
    throw DataError("decode: expected latent of " + std::to_string(params.config.latent_dim) +
                    " values, got " + shape_str(z.shape));
  }
  Var h = t.reshape(latent, {1, params.config.latent_dim});
  for (std::size_t i = 0; i < params.decoder.size(); ++i) {
    DecoderLayer& layer = params.decoder[i];
    h = t.linear(h, t.param(layer.w), t.param(layer.b));
    if (i + 1 < params.decoder.size()) h = t.relu(h);  // output layer stays linear
  }
  return t.reshape(h, {params.config.output_points, 3});
}

Tensor points_tensor(const PointCloud& pc) {
  Tensor t({pc.size(), 3});
  for (std::size_t i = 0; i < pc.size(); ++i) {
    t.at(i, 0) = pc[i][0];
    t.at(i, 1) = pc[i][1];
    t.at(i, 2) = pc[i][2];
  }
  return t;
}

PointCloud cloud_from_tensor(const Tensor& flat) {
  if (flat.numel() % 3 != 0) {
    throw DataError("cloud_from_tensor: numel " + std::to_string(flat.numel()) +
                    " not divisible by 3");
  }
  PointCloud pc;
  pc.points.resize(flat.numel() / 3);
  for (std::size_t i = 0; i < pc.size(); ++i) {
    pc.points[i] = {flat.data[3 * i], flat.data[3 * i + 1], flat.data[3 * i + 2]};
  }
  return pc;
}

Tensor encode_infer(ModelParameters& params, const PointCloud& pc) {
  Tape t;
  return t.value(encode_op(t, params, t.input(points_tensor(pc)), /*train=*/false));
}

PointCloud decode_infer(ModelParameters& params, const Tensor& latent) {
  Tape t;
  return cloud_from_tensor(
      t.value(decode_op(t, params, t.input(latent), /*train=*/false)));
}

}  // namespace pcac
