#pragma once

#include <cstdint>
#include <vector>

#include "pcac/autodiff.hpp"
#include "pcac/point_cloud.hpp"

namespace pcac {

/// Exact nearest-neighbour search over a fixed 3-D point set. Median-split
/// tree with branch-and-bound queries; results match brute force exactly.
class KdTree {
 public:
  explicit KdTree(const std::vector<Vec3>& points);  // DataError if empty

  /// Index (into the constructor's array) of the closest point to q and the
  /// squared distance to it.
  std::pair<std::size_t, double> nearest(const Vec3& q) const;

  std::size_t size() const { return index_.size(); }

 private:
  struct Node {
    double split = 0.0;
    int axis = -1;  // -1 marks a leaf
    std::uint32_t left = 0, right = 0;
    std::uint32_t begin = 0, end = 0;
  };

  std::uint32_t build(std::uint32_t begin, std::uint32_t end, const Vec3& lo,
                      const Vec3& hi);
  void select_mid(std::uint32_t begin, std::uint32_t end, std::uint32_t mid,
                  const double* coord);

  // One array per coordinate, permuted into tree order and NaN padded to the
  // leaf stride, so leaf scans are three short contiguous streams.
  std::vector<double> xs_, ys_, zs_;
  std::vector<std::uint32_t> index_;  // position in tree order -> original index
  std::vector<Node> nodes_;
  std::uint32_t root_ = 0;
};

struct ChamferParts {
  double value = 0.0;                // sum of both directed terms
  std::vector<std::size_t> nn_ab;    // for each a-point, nearest b index
  std::vector<std::size_t> nn_ba;    // for each b-point, nearest a index
};

/// Symmetric Chamfer distance: Σ_a min_b |a-b|² + Σ_b min_a |b-a|².
/// Brute-force reference, O(|a|·|b|).
double chamfer_brute(const std::vector<Vec3>& a, const std::vector<Vec3>& b);

/// Same quantity via two KdTrees, with the nearest-neighbour assignments.
ChamferParts chamfer_parts(const std::vector<Vec3>& a, const std::vector<Vec3>& b);

inline double chamfer(const PointCloud& a, const PointCloud& b) {
  return chamfer_parts(a.points, b.points).value;
}

/// Tape op: Chamfer distance between two [n,3] coordinate tensors. The
/// backward pass differentiates through the fixed nearest-neighbour
/// assignment (a subgradient wherever the assignment is about to switch).
Var chamfer_op(Tape& t, Var a, Var b);

}  // namespace pcac
