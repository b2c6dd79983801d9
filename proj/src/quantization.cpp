#include "pcac/quantization.hpp"

#include <cmath>

#include "pcac/errors.hpp"

namespace pcac {

QuantizerMode parse_quantizer_mode(const std::string& name) {
  if (name == "round") return QuantizerMode::kRound;
  if (name == "noise") return QuantizerMode::kAdditiveNoise;
  if (name == "ste") return QuantizerMode::kStraightThrough;
  throw UsageError("unknown quantizer mode: " + name + " (round|noise|ste)");
}

double round_half_away(double v) { return std::round(v); }

Tensor quantize(const Tensor& z, QuantizerMode mode, std::mt19937_64& rng) {
  if (!all_finite(z)) throw NumericError("quantize: non-finite latent");
  Tensor out = z;
  switch (mode) {
    case QuantizerMode::kRound:
    case QuantizerMode::kStraightThrough:
      for (double& v : out.data) v = round_half_away(v);
      break;
    case QuantizerMode::kAdditiveNoise: {
      std::uniform_real_distribution<double> noise(-0.5, 0.5);
      for (double& v : out.data) v += noise(rng);
      break;
    }
  }
  return out;
}

Var quantize_op(Tape& t, Var z, QuantizerMode mode, std::mt19937_64& rng) {
  Tensor value = quantize(t.value(z), mode, rng);
  return t.custom(std::move(value), {z},
                  [](Tape& tape, Var out, const std::vector<Var>& deps) {
                    const Tensor& gy = tape.grad(out);
                    Tensor& gz = tape.grad_ref(deps[0]);
                    for (std::size_t i = 0; i < gy.numel(); ++i) gz.data[i] += gy.data[i];
                  });
}

}  // namespace pcac
