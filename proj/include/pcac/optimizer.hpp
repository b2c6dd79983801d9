#pragma once

#include <cstdint>
#include <vector>

#include "pcac/autodiff.hpp"

namespace pcac {

struct AdamConfig {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction. Moment buffers are keyed by position in the
/// parameter list, so the list must stay stable for the optimizer's lifetime.
class Adam {
 public:
  Adam(std::vector<Parameter*> params, AdamConfig cfg);

  /// One update from the gradients currently stored on the parameters.
  void step();
  void zero_grad();
  std::size_t steps_taken() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  std::vector<Parameter*> params_;
  AdamConfig cfg_;
  std::vector<Tensor> m_, v_;
  std::size_t t_ = 0;
};

}  // namespace pcac
