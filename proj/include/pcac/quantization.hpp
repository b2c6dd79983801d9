#pragma once

#include <cstdint>
#include <random>

#include "pcac/autodiff.hpp"
#include "pcac/tensor.hpp"

namespace pcac {

enum class QuantizerMode {
  kRound,            // inference: nearest integer, halves away from zero
  kAdditiveNoise,    // training relaxation: z + Uniform(-1/2, 1/2)
  kStraightThrough,  // training relaxation: round forward, identity gradient
};

QuantizerMode parse_quantizer_mode(const std::string& name);  // throws UsageError

double round_half_away(double v);

/// Plain (gradient-free) quantization. `rng` is consumed only in
/// AdditiveNoise mode.
Tensor quantize(const Tensor& z, QuantizerMode mode, std::mt19937_64& rng);

/// Tape version: all three modes pass the incoming gradient through unchanged
/// (for Round this makes the op usable in straight-through style pipelines;
/// bitstream code paths never differentiate it).
Var quantize_op(Tape& t, Var z, QuantizerMode mode, std::mt19937_64& rng);

}  // namespace pcac
