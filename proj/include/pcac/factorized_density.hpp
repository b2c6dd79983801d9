#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include "pcac/autodiff.hpp"
#include "pcac/tensor.hpp"

namespace pcac {

/// Learned fully factorized prior over quantized latents. Each channel i has
/// its own monotone CDF c_i = sigmoid ∘ f_4 ∘ … ∘ f_1 with
///   f_j(x) = g_j(H_j x + b_j),   g_j(y) = y + a_j ⊙ tanh(y),
/// where H_j = softplus(Ĥ_j) keeps every linear map nonnegative (hence each
/// f_j nondecreasing) and a_j = tanh(â_j) ∈ (−1, 1) keeps the gate monotone.
/// The integer-bin likelihood is c(v + 1/2) − c(v − 1/2).
class FactorizedDensity {
 public:
  static constexpr std::array<std::size_t, 5> kWidths = {1, 3, 3, 3, 1};
  static constexpr std::size_t kLayers = 4;
  static constexpr double kLikelihoodFloor = 1e-12;

  FactorizedDensity() = default;
  /// Identity-like initialization: Ĥ set so the initial CDF spreads over a
  /// scale of ~10, biases uniform in (−1/2, 1/2), gates zero.
  FactorizedDensity(std::size_t channels, std::mt19937_64& rng);

  std::size_t channels() const { return channels_; }
  double tail_mass() const { return tail_mass_; }

  /// CDF of a single channel at x, in [0, 1]. Gradient-free.
  double cdf(std::size_t channel, double x) const;
  /// CDF of every channel evaluated at its own offset: out[i] = c_i(x[i]).
  std::vector<double> cdf_all(const std::vector<double>& x) const;

  /// Per-channel likelihoods of a latent-like vector, floored at 1e-12.
  std::vector<double> likelihood(const std::vector<double>& zhat) const;
  /// Σ −log2(likelihood). Gradient-free twin of rate_bits_op.
  double rate_bits(const std::vector<double>& zhat) const;

  /// Tape versions for training. zhat must have numel == channels.
  Var likelihood_op(Tape& t, Var zhat);
  Var rate_bits_op(Tape& t, Var zhat);

  /// Parameter access for the optimizer and serialization, in a fixed order:
  /// per layer j: Hhat_j, bias_j, ahat_j.
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;

 private:
  Var cdf_op(Tape& t, Var x);  // x: [k] or [k,1] -> [k,1]

  std::size_t channels_ = 0;
  double tail_mass_ = 1e-9;
  std::vector<Parameter> hhat_;  // [k, w_out, w_in] per layer
  std::vector<Parameter> bias_;  // [k, w_out] per layer
  std::vector<Parameter> ahat_;  // [k, w_out] per layer
};

}  // namespace pcac
