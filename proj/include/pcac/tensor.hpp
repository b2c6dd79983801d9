#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace pcac {

/// Dense row-major tensor of 64-bit floats. Shape-checked construction;
/// everything else is plain data access.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s);  // zero-filled
  Tensor(std::vector<std::size_t> s, std::vector<double> d);

  static Tensor scalar(double v) { return Tensor({1}, {v}); }

  std::size_t numel() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t dim(std::size_t i) const { return shape[i]; }

  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }

  // Rank-2 accessors (row, col).
  double& at(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * shape[1] + c]; }
};

std::size_t shape_numel(const std::vector<std::size_t>& shape);
std::string shape_str(const std::vector<std::size_t>& shape);
bool same_shape(const Tensor& a, const Tensor& b);
bool all_finite(const Tensor& t);

}  // namespace pcac
