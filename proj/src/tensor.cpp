#include "pcac/tensor.hpp"

#include <cmath>

#include "pcac/errors.hpp"

namespace pcac {

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (const std::size_t d : shape) n *= d;
  return n;
}

std::string shape_str(const std::vector<std::size_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Tensor::Tensor(std::vector<std::size_t> s) : shape(std::move(s)), data(shape_numel(shape), 0.0) {
  for (const std::size_t d : shape) {
    if (d == 0) throw DataError("Tensor: zero dimension in shape " + shape_str(shape));
  }
}

Tensor::Tensor(std::vector<std::size_t> s, std::vector<double> d)
    : shape(std::move(s)), data(std::move(d)) {
  if (data.size() != shape_numel(shape)) {
    throw DataError("Tensor: " + std::to_string(data.size()) + " values for shape " +
                    shape_str(shape));
  }
}

bool same_shape(const Tensor& a, const Tensor& b) { return a.shape == b.shape; }

bool all_finite(const Tensor& t) {
  for (const double v : t.data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace pcac
