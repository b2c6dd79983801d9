#include "pcac/factorized_density.hpp"

#include <cmath>

#include "pcac/errors.hpp"

namespace pcac {

namespace {

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double stable_softplus(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

constexpr double kLog2 = 0.6931471805599453;

}  // namespace

FactorizedDensity::FactorizedDensity(std::size_t channels, std::mt19937_64& rng)
    : channels_(channels) {
  if (channels == 0) throw DataError("FactorizedDensity: zero channels");
  // Spread the initial CDF over a scale of ~10 split evenly across layers.
  const double scale = std::pow(10.0, 1.0 / static_cast<double>(kLayers));
  std::uniform_real_distribution<double> half(-0.5, 0.5);
  for (std::size_t j = 0; j < kLayers; ++j) {
    const std::size_t w_in = kWidths[j], w_out = kWidths[j + 1];
    const double h_init = std::log(std::expm1(1.0 / (scale * static_cast<double>(w_out))));

    Tensor h({channels, w_out, w_in});
    for (double& v : h.data) v = h_init;
    hhat_.emplace_back("density.hhat" + std::to_string(j), std::move(h));

    Tensor b({channels, w_out});
    for (double& v : b.data) v = half(rng);
    bias_.emplace_back("density.bias" + std::to_string(j), std::move(b));

    ahat_.emplace_back("density.ahat" + std::to_string(j), Tensor({channels, w_out}));
  }
}

double FactorizedDensity::cdf(std::size_t channel, double x) const {
  if (channel >= channels_) throw DataError("FactorizedDensity::cdf: bad channel");
  std::array<double, 3> cur{x, 0.0, 0.0};
  for (std::size_t j = 0; j < kLayers; ++j) {
    const std::size_t w_in = kWidths[j], w_out = kWidths[j + 1];
    const Tensor& h = hhat_[j].value;
    const Tensor& b = bias_[j].value;
    const Tensor& a = ahat_[j].value;
    std::array<double, 3> next{};
    for (std::size_t oo = 0; oo < w_out; ++oo) {
      double y = b.data[channel * w_out + oo];
      for (std::size_t ii = 0; ii < w_in; ++ii) {
        y += stable_softplus(h.data[(channel * w_out + oo) * w_in + ii]) * cur[ii];
      }
      next[oo] = y + std::tanh(a.data[channel * w_out + oo]) * std::tanh(y);
    }
    cur = next;
  }
  return stable_sigmoid(cur[0]);
}

std::vector<double> FactorizedDensity::cdf_all(const std::vector<double>& x) const {
  if (x.size() != channels_) throw DataError("FactorizedDensity::cdf_all: size mismatch");
  std::vector<double> out(channels_);
  for (std::size_t i = 0; i < channels_; ++i) out[i] = cdf(i, x[i]);
  return out;
}

std::vector<double> FactorizedDensity::likelihood(const std::vector<double>& zhat) const {
  std::vector<double> hi(channels_), lo(channels_);
  for (std::size_t i = 0; i < channels_; ++i) {
    hi[i] = zhat[i] + 0.5;
    lo[i] = zhat[i] - 0.5;
  }
  hi = cdf_all(hi);
  lo = cdf_all(lo);
  std::vector<double> p(channels_);
  for (std::size_t i = 0; i < channels_; ++i) {
    p[i] = std::max(hi[i] - lo[i], kLikelihoodFloor);
  }
  return p;
}

double FactorizedDensity::rate_bits(const std::vector<double>& zhat) const {
  double bits = 0.0;
  for (const double p : likelihood(zhat)) bits -= std::log(p) / kLog2;
  return bits;
}

Var FactorizedDensity::cdf_op(Tape& t, Var x) {
  Var h = x;
  for (std::size_t j = 0; j < kLayers; ++j) {
    const Var w = t.softplus(t.param(hhat_[j]));
    h = t.add(t.channel_linear(w, h), t.param(bias_[j]));
    const Var gate = t.tanh(t.param(ahat_[j]));
    h = t.add(h, t.mul(gate, t.tanh(h)));
  }
  return t.sigmoid(h);
}

Var FactorizedDensity::likelihood_op(Tape& t, Var zhat) {
  if (t.value(zhat).numel() != channels_) {
    throw DataError("FactorizedDensity::likelihood_op: latent size mismatch");
  }
  const Var hi = cdf_op(t, t.scale(zhat, 1.0, 0.5));
  const Var lo = cdf_op(t, t.scale(zhat, 1.0, -0.5));
  return t.clamp_min(t.sub(hi, lo), kLikelihoodFloor);
}

Var FactorizedDensity::rate_bits_op(Tape& t, Var zhat) {
  return t.scale(t.sum(t.log(likelihood_op(t, zhat))), -1.0 / kLog2);
}

std::vector<Parameter*> FactorizedDensity::parameters() {
  std::vector<Parameter*> out;
  for (std::size_t j = 0; j < kLayers; ++j) {
    out.push_back(&hhat_[j]);
    out.push_back(&bias_[j]);
    out.push_back(&ahat_[j]);
  }
  return out;
}

std::vector<const Parameter*> FactorizedDensity::parameters() const {
  std::vector<const Parameter*> out;
  for (std::size_t j = 0; j < kLayers; ++j) {
    out.push_back(&hhat_[j]);
    out.push_back(&bias_[j]);
    out.push_back(&ahat_[j]);
  }
  return out;
}

}  // namespace pcac
