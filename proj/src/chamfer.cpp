#include "pcac/chamfer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pcac/errors.hpp"

namespace pcac {

namespace {

// Every leaf owns exactly this many coordinate slots (NaN padded), so the
// scan loop has compile-time bounds and vectorizes.
constexpr std::uint32_t kLeafStride = 16;

double sqdist(const Vec3& a, const Vec3& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return dx * dx + dy * dy + dz * dz;
}

}  // namespace

KdTree::KdTree(const std::vector<Vec3>& points) {
  if (points.empty()) throw DataError("KdTree: empty point set");
  const std::size_t n = points.size();
  // Splits always advance by multiples of the leaf stride, so only the final
  // leaf can be ragged; NaN tail padding squares it off.
  const std::size_t padded = (n + kLeafStride - 1) / kLeafStride * kLeafStride;
  xs_.assign(padded, std::numeric_limits<double>::quiet_NaN());
  ys_.assign(padded, std::numeric_limits<double>::quiet_NaN());
  zs_.assign(padded, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < n; ++i) {
    xs_[i] = points[i][0];
    ys_[i] = points[i][1];
    zs_[i] = points[i][2];
  }
  index_.resize(n);
  std::iota(index_.begin(), index_.end(), 0u);
  Vec3 lo = points[0], hi = points[0];
  for (const Vec3& p : points) {
    lo = {std::min(lo[0], p[0]), std::min(lo[1], p[1]), std::min(lo[2], p[2])};
    hi = {std::max(hi[0], p[0]), std::max(hi[1], p[1]), std::max(hi[2], p[2])};
  }
  nodes_.reserve(2 * n / kLeafStride + 2);
  root_ = build(0, static_cast<std::uint32_t>(n), lo, hi);
}

void KdTree::select_mid(std::uint32_t begin, std::uint32_t end, std::uint32_t mid,
                        const double* coord) {
  // Quickselect that keeps all four parallel arrays in lockstep, so no
  // indirection is needed afterwards. Pivot positions are forced to `mid`,
  // which keeps the tree balanced regardless of pivot luck.
  const auto swap_all = [&](std::uint32_t i, std::uint32_t j) {
    std::swap(xs_[i], xs_[j]);
    std::swap(ys_[i], ys_[j]);
    std::swap(zs_[i], zs_[j]);
    std::swap(index_[i], index_[j]);
  };
  while (end - begin > 2) {
    const double a = coord[begin], b = coord[begin + (end - begin) / 2], c = coord[end - 1];
    const double pivot = std::max(std::min(a, b), std::min(std::max(a, b), c));
    std::int64_t i = begin, j = static_cast<std::int64_t>(end) - 1;
    while (i <= j) {
      while (coord[i] < pivot) ++i;
      while (coord[j] > pivot) --j;
      if (i <= j) {
        swap_all(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
        ++i;
        --j;
      }
    }
    if (mid <= j) {
      end = static_cast<std::uint32_t>(j) + 1;
    } else if (mid >= i) {
      begin = static_cast<std::uint32_t>(i);
    } else {
      return;  // everything in (j, i) equals the pivot; mid is placed
    }
  }
  if (end - begin == 2 && coord[begin] > coord[begin + 1]) swap_all(begin, begin + 1);
}

std::uint32_t KdTree::build(std::uint32_t begin, std::uint32_t end, const Vec3& lo,
                            const Vec3& hi) {
  const std::uint32_t id = static_cast<std::uint32_t>(nodes_.size());
  nodes_.push_back({});
  if (end - begin <= kLeafStride) {
    nodes_[id].begin = begin;
    nodes_[id].end = begin + kLeafStride;  // fixed window; the tail is NaN padded
    return id;
  }
  // Split the widest axis of the (approximate, inherited) bounding box near
  // the median, rounded so leaf windows stay stride aligned.
  int axis = 0;
  for (int c = 1; c < 3; ++c) {
    if (hi[c] - lo[c] > hi[axis] - lo[axis]) axis = c;
  }
  const std::uint32_t half = (end - begin) / 2;
  const std::uint32_t mid = begin + ((half + kLeafStride / 2) & ~(kLeafStride - 1));
  const double* coord = axis == 0 ? xs_.data() : axis == 1 ? ys_.data() : zs_.data();
  select_mid(begin, end, mid, coord);

  const double split = coord[mid];
  nodes_[id].axis = axis;
  nodes_[id].split = split;
  Vec3 left_hi = hi, right_lo = lo;
  left_hi[axis] = split;
  right_lo[axis] = split;
  const std::uint32_t left = build(begin, mid, lo, left_hi);
  const std::uint32_t right = build(mid, end, right_lo, hi);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

std::pair<std::size_t, double> KdTree::nearest(const Vec3& q) const {
  std::size_t best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  // Deferred far subtrees with their split-plane distance bounds. Depth is
  // ~log2(n / leaf); 64 slots cover any realistic input.
  struct Pending {
    std::uint32_t node;
    double bound;
  };
  Pending stack[64];
  int top = 0;
  std::uint32_t id = root_;
  for (;;) {
    const Node& n = nodes_[id];
    if (n.axis < 0) {
      // Fixed-width scan; NaN padding never wins a comparison. The leaf
      // minimum is reduced pairwise first so the only data-dependent branch
      // is the rare "this leaf improved the answer".
      double d2s[kLeafStride];
      const double qx = q[0], qy = q[1], qz = q[2];
      const double* px = xs_.data() + n.begin;
      const double* py = ys_.data() + n.begin;
      const double* pz = zs_.data() + n.begin;
      for (std::uint32_t i = 0; i < kLeafStride; ++i) {
        const double dx = px[i] - qx;
        const double dy = py[i] - qy;
        const double dz = pz[i] - qz;
        d2s[i] = dx * dx + dy * dy + dz * dz;
      }
      for (std::uint32_t w = kLeafStride / 2; w > 0; w /= 2) {
        for (std::uint32_t i = 0; i < w; ++i) d2s[i] = std::min(d2s[i], d2s[i + w]);
      }
      if (d2s[0] < best_d2) {
        best_d2 = d2s[0];
        for (std::uint32_t i = 0; i < kLeafStride; ++i) {
          const double dx = px[i] - qx;
          const double dy = py[i] - qy;
          const double dz = pz[i] - qz;
          if (dx * dx + dy * dy + dz * dz == best_d2) {
            best = index_[n.begin + i];
            break;
          }
        }
      }
      // Resume at the closest still-viable deferred subtree.
      for (;;) {
        if (top == 0) return {best, best_d2};
        const Pending p = stack[--top];
        if (p.bound < best_d2) {
          id = p.node;
          break;
        }
      }
      continue;
    }
    // Branchless descent: the comparison against the split is a coin flip,
    // so predicated selects beat a branch here.
    const double delta = q[n.axis] - n.split;
    const bool go_right = !(delta < 0.0);
    const std::uint32_t near = go_right ? n.right : n.left;
    const std::uint32_t far = go_right ? n.left : n.right;
    const double far_bound = delta * delta;
    stack[top] = {far, far_bound};
    top += far_bound < best_d2 ? 1 : 0;
    id = near;
  }
}

double chamfer_brute(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  if (a.empty() || b.empty()) throw DataError("chamfer: empty point cloud");
  double total = 0.0;
  for (const Vec3& p : a) {
    double best = std::numeric_limits<double>::infinity();
    for (const Vec3& q : b) best = std::min(best, sqdist(p, q));
    total += best;
  }
  for (const Vec3& q : b) {
    double best = std::numeric_limits<double>::infinity();
    for (const Vec3& p : a) best = std::min(best, sqdist(q, p));
    total += best;
  }
  return total;
}

ChamferParts chamfer_parts(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  if (a.empty() || b.empty()) throw DataError("chamfer: empty point cloud");
  const KdTree ta(a), tb(b);
  ChamferParts out;
  out.nn_ab.resize(a.size());
  out.nn_ba.resize(b.size());
  out.value = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto [j, d2] = tb.nearest(a[i]);
    out.nn_ab[i] = j;
    out.value += d2;
  }
  for (std::size_t j = 0; j < b.size(); ++j) {
    const auto [i, d2] = ta.nearest(b[j]);
    out.nn_ba[j] = i;
    out.value += d2;
  }
  return out;
}

namespace {

std::vector<Vec3> rows_of(const Tensor& t, const char* arg) {
  if (t.rank() != 2 || t.dim(1) != 3 || t.dim(0) == 0) {
    throw DataError(std::string("chamfer: ") + arg + " must be [n,3] with n>0, got " +
                    shape_str(t.shape));
  }
  std::vector<Vec3> out(t.dim(0));
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = {t.data[3 * i], t.data[3 * i + 1], t.data[3 * i + 2]};
  }
  return out;
}

}  // namespace

Var chamfer_op(Tape& t, Var a, Var b) {
  const std::vector<Vec3> pa = rows_of(t.value(a), "first argument");
  const std::vector<Vec3> pb = rows_of(t.value(b), "second argument");
  ChamferParts parts = chamfer_parts(pa, pb);

  Tensor value({1});
  value.data[0] = parts.value;
  return t.custom(
      std::move(value), {a, b},
      [pa, pb, parts = std::move(parts)](Tape& tape, Var out, const std::vector<Var>& deps) {
        const double g = tape.grad_ref(out).data[0];
        Tensor& ga = tape.grad_ref(deps[0]);
        Tensor& gb = tape.grad_ref(deps[1]);
        // d|p - q|^2/dp = 2 (p - q); each point contributes through its own
        // nearest-neighbour term and through terms that selected it.
        for (std::size_t i = 0; i < pa.size(); ++i) {
          const Vec3& q = pb[parts.nn_ab[i]];
          for (int c = 0; c < 3; ++c) {
            const double dgrad = 2.0 * g * (pa[i][c] - q[c]);
            ga.data[3 * i + c] += dgrad;
            gb.data[3 * parts.nn_ab[i] + c] -= dgrad;
          }
        }
        for (std::size_t j = 0; j < pb.size(); ++j) {
          const Vec3& p = pa[parts.nn_ba[j]];
          for (int c = 0; c < 3; ++c) {
            const double dgrad = 2.0 * g * (pb[j][c] - p[c]);
            gb.data[3 * j + c] += dgrad;
            ga.data[3 * parts.nn_ba[j] + c] -= dgrad;
          }
        }
      });
}

}  // namespace pcac
