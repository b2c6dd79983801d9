#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "pcac/autodiff.hpp"
#include "pcac/factorized_density.hpp"
#include "pcac/point_cloud.hpp"

namespace pcac {

struct ArchitectureConfig {
  std::size_t input_points = 2048;
  std::size_t latent_dim = 512;
  std::size_t output_points = 0;  // 0 means "same as input_points"
  std::vector<std::size_t> encoder_widths;  // empty means {64,128,128,256,latent_dim}
  std::vector<std::size_t> decoder_widths;  // empty means {256,256,3*output_points}
  bool activation_on_last_encoder_layer = true;
  bool batch_norm_before_activation = false;  // ablation: linear → BN → ReLU

  /// Fills defaulted fields and validates width consistency (last encoder
  /// width = latent_dim, last decoder width = 3·output_points).
  ArchitectureConfig resolved() const;  // throws DataError on inconsistency
};

/// Named point-count tiers with their matching latent sizes:
/// 2048→512, 1024→256, 512→128, 256→64, 128→32.
ArchitectureConfig tier_config(std::size_t input_points);  // throws UsageError

struct EncoderLayer {
  Parameter w, b;           // linear
  Parameter gamma, beta;    // batch norm
  Tensor run_mean, run_var; // batch norm running statistics (not trained)
  bool normalized = true;   // false on a bare final layer
};

struct DecoderLayer {
  Parameter w, b;
};

struct ModelParameters {
  ArchitectureConfig config;
  std::vector<EncoderLayer> encoder;
  std::vector<DecoderLayer> decoder;
  FactorizedDensity density;  // prior over the latent channels

  std::vector<Parameter*> trainable();
  std::vector<const Parameter*> trainable() const;
};

/// Fan-in-scaled uniform init, U(±1/√fan_in), zero biases, BN gamma 1 /
/// beta 0, running stats (0, 1); density at its identity-like init.
/// Deterministic given seed.
ModelParameters init_parameters(const ArchitectureConfig& config, std::uint64_t seed);

/// Per-point MLP + feature-wise max pool. points: [n,3] with n = config
/// input_points; returns the latent, shape [latent_dim]. Exactly invariant
/// to the order of input rows in both modes.
Var encode_op(Tape& t, ModelParameters& params, Var points, bool train);

/// Fully connected synthesis: latent [latent_dim] -> coordinates [m, 3].
/// No activation on the output layer. `train` is accepted for symmetry; the
/// decoder carries no batch statistics.
Var decode_op(Tape& t, ModelParameters& params, Var latent, bool train);

// Gradient-free wrappers (inference mode).
Tensor points_tensor(const PointCloud& pc);
PointCloud cloud_from_tensor(const Tensor& flat);  // numel divisible by 3
Tensor encode_infer(ModelParameters& params, const PointCloud& pc);
PointCloud decode_infer(ModelParameters& params, const Tensor& latent);

}  // namespace pcac
