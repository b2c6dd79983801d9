#include "pcac/optimizer.hpp"

#include <cmath>

#include "pcac/errors.hpp"

namespace pcac {

Adam::Adam(std::vector<Parameter*> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  if (!(cfg_.lr > 0.0) || !(cfg_.beta1 >= 0.0 && cfg_.beta1 < 1.0) ||
      !(cfg_.beta2 >= 0.0 && cfg_.beta2 < 1.0) || !(cfg_.eps > 0.0)) {
    throw UsageError("Adam: invalid hyperparameters");
  }
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const Parameter* p : params_) {
    m_.emplace_back(p->value.shape);
    v_.emplace_back(p->value.shape);
  }
}

void Adam::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Parameter& p = *params_[i];
    for (std::size_t j = 0; j < p.value.numel(); ++j) {
      const double g = p.grad.data[j];
      if (!std::isfinite(g)) throw NumericError("Adam: non-finite gradient for " + p.name);
      double& m = m_[i].data[j];
      double& v = v_[i].data[j];
      m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * g;
      v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * g * g;
      p.value.data[j] -= cfg_.lr * (m / c1) / (std::sqrt(v / c2) + cfg_.eps);
    }
  }
}

void Adam::zero_grad() {
  for (Parameter* p : params_) p->zero_grad();
}

}  // namespace pcac
