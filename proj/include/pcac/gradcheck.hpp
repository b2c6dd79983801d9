#pragma once

#include <functional>
#include <vector>

#include "pcac/tensor.hpp"

namespace pcac {

struct FdResult {
  double max_rel_err = 0.0;
  std::vector<std::size_t> excluded;  // coordinates skipped at detected kinks
};

/// Central-difference gradient check. For each coordinate of `point`,
/// compares `analytic_grad` against (f(x+h) - f(x-h)) / 2h with relative
/// error |analytic - central| / max(|analytic|, 1e-8). Coordinates where the
/// two one-sided differences disagree sharply (a kink between x-h and x+h,
/// e.g. ReLU at zero) are excluded from the error and reported instead.
FdResult finite_difference_check(const std::function<double(const Tensor&)>& value_fn,
                                 const Tensor& analytic_grad, const Tensor& point, double step);

}  // namespace pcac
