#include "pcac/autodiff.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "pcac/errors.hpp"

namespace pcac {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using CMatMap = Eigen::Map<const RowMat>;

[[noreturn]] void shape_fail(const char* op, const std::string& detail) {
  throw DataError(std::string(op) + ": " + detail);
}

void require_rank2(const char* op, const Tensor& t) {
  if (t.rank() != 2) shape_fail(op, "expected rank-2 tensor, got " + shape_str(t.shape));
}

// Permutation-invariant summation: every addend is truncated onto a fixed
// 2^-40 grid and accumulated in a 128-bit integer, so the result depends only
// on the multiset of addends, never on their order. The grid error (~1e-12
// per addend) sits far below every tolerance in this codebase. Magnitudes are
// clamped near 2^110 to keep any realistic count of addends inside 128 bits.
class InvariantSum {
 public:
  void add(double v) {
    long double scaled = static_cast<long double>(v) * kScale;
    if (scaled > kLimit) scaled = kLimit;
    if (scaled < -kLimit) scaled = -kLimit;
    acc_ += static_cast<__int128>(scaled);
  }
  double get() const { return static_cast<double>(static_cast<long double>(acc_) / kScale); }

 private:
  static constexpr long double kScale = 1099511627776.0L;  // 2^40
  static constexpr long double kLimit = 1.2980742146337069e33L;  // 2^110
  __int128 acc_ = 0;
};

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

}  // namespace

Var Tape::push(Tensor value) {
  Node node;
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return {static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::constant(Tensor v) { return push(std::move(v)); }

Var Tape::input(Tensor v) { return push(std::move(v)); }

Var Tape::param(Parameter& p) {
  Var v = push(p.value);
  nodes_[v.id].external = &p;
  return v;
}

const Tensor& Tape::value(Var v) const { return nodes_.at(v.id).value; }

const Tensor& Tape::grad(Var v) const {
  if (!backward_done_) throw DataError("Tape::grad: backward has not run");
  return nodes_.at(v.id).grad;
}

Tensor& Tape::grad_ref(Var v) { return nodes_.at(v.id).grad; }

void Tape::backward(Var loss) {
  if (loss.id >= nodes_.size()) throw DataError("Tape::backward: bad loss handle");
  if (nodes_[loss.id].value.numel() != 1) {
    throw DataError("Tape::backward: loss must be scalar, got " +
                    shape_str(nodes_[loss.id].value.shape));
  }
  for (Node& n : nodes_) n.grad = Tensor(n.value.shape);
  backward_done_ = true;  // grads are now allocated for closure access
  nodes_[loss.id].grad.data[0] = 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if (it->backward) it->backward();
  }
  for (Node& n : nodes_) {
    if (!n.external) continue;
    for (std::size_t i = 0; i < n.grad.numel(); ++i) n.external->grad.data[i] += n.grad.data[i];
  }
}

void Tape::clear() {
  nodes_.clear();
  backward_done_ = false;
}

Var Tape::linear(Var xv, Var wv, Var bv) {
  const Tensor& x = value(xv);
  const Tensor& w = value(wv);
  const Tensor& b = value(bv);
  require_rank2("linear", x);
  require_rank2("linear", w);
  if (b.rank() != 1) shape_fail("linear", "bias must be rank 1, got " + shape_str(b.shape));
  const std::size_t n = x.dim(0), a = x.dim(1), m = w.dim(1);
  if (w.dim(0) != a || b.dim(0) != m) {
    shape_fail("linear", "x " + shape_str(x.shape) + " w " + shape_str(w.shape) + " b " +
                             shape_str(b.shape));
  }

  Tensor out({n, m});
  MatMap(out.data.data(), n, m).noalias() =
      CMatMap(x.data.data(), n, a) * CMatMap(w.data.data(), a, m);
  MatMap(out.data.data(), n, m).rowwise() +=
      Eigen::Map<const Eigen::RowVectorXd>(b.data.data(), m);

  Var o = push(std::move(out));
  nodes_[o.id].backward = [this, xv, wv, bv, o, n, a, m]() {
    const Tensor& x = value(xv);
    const Tensor& w = value(wv);
    const Tensor& gy = nodes_[o.id].grad;
    CMatMap X(x.data.data(), n, a), W(w.data.data(), a, m), GY(gy.data.data(), n, m);
    MatMap(grad_ref(xv).data.data(), n, a).noalias() += GY * W.transpose();
    MatMap(grad_ref(wv).data.data(), a, m).noalias() += X.transpose() * GY;
    Eigen::Map<Eigen::RowVectorXd>(grad_ref(bv).data.data(), m) += GY.colwise().sum();
  };
  return o;
}

Var Tape::relu(Var xv) {
  Tensor out = value(xv);
  for (double& v : out.data) v = v > 0.0 ? v : 0.0;
  Var o = push(std::move(out));
  nodes_[o.id].backward = [this, xv, o]() {
    const Tensor& x = value(xv);
    const Tensor& gy = nodes_[o.id].grad;
    Tensor& gx = grad_ref(xv);
    for (std::size_t i = 0; i < x.numel(); ++i) {
      if (x.data[i] > 0.0) gx.data[i] += gy.data[i];  // subgradient 0 at x == 0
    }
  };
  return o;
}

Var Tape::batch_norm(Var xv, Var gammav, Var betav, Tensor& running_mean, Tensor& running_var,
                     bool train, double momentum, double eps) {
  const Tensor& x = value(xv);
  const Tensor& gamma = value(gammav);
  const Tensor& beta = value(betav);
  require_rank2("batch_norm", x);
  const std::size_t n = x.dim(0), c = x.dim(1);
  if (gamma.shape != std::vector<std::size_t>{c} || beta.shape != std::vector<std::size_t>{c} ||
      running_mean.shape != std::vector<std::size_t>{c} ||
      running_var.shape != std::vector<std::size_t>{c}) {
    shape_fail("batch_norm", "channel tensors must have shape [" + std::to_string(c) + "]");
  }
  if (train && n < 2) shape_fail("batch_norm", "train mode needs at least 2 rows");

  std::vector<double> mean(c), inv_std(c);
  if (train) {
    for (std::size_t j = 0; j < c; ++j) {
      InvariantSum s;
      for (std::size_t i = 0; i < n; ++i) s.add(x.at(i, j));
      mean[j] = s.get() / static_cast<double>(n);
      InvariantSum s2;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = x.at(i, j) - mean[j];
        s2.add(d * d);
      }
      const double var = s2.get() / static_cast<double>(n);  // biased
      inv_std[j] = 1.0 / std::sqrt(var + eps);
      running_mean.data[j] = momentum * running_mean.data[j] + (1.0 - momentum) * mean[j];
      running_var.data[j] = momentum * running_var.data[j] + (1.0 - momentum) * var;
    }
  } else {
    for (std::size_t j = 0; j < c; ++j) {
      mean[j] = running_mean.data[j];
      inv_std[j] = 1.0 / std::sqrt(running_var.data[j] + eps);
    }
  }

  Tensor xhat({n, c});
  Tensor out({n, c});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      xhat.at(i, j) = (x.at(i, j) - mean[j]) * inv_std[j];
      out.at(i, j) = gamma.data[j] * xhat.at(i, j) + beta.data[j];
    }
  }

  Var o = push(std::move(out));
  nodes_[o.id].backward = [this, xv, gammav, betav, o, xhat = std::move(xhat),
                           inv_std = std::move(inv_std), train, n, c]() {
    const Tensor& gamma = value(gammav);
    const Tensor& gy = nodes_[o.id].grad;
    Tensor& gx = grad_ref(xv);
    Tensor& ggamma = grad_ref(gammav);
    Tensor& gbeta = grad_ref(betav);
    for (std::size_t j = 0; j < c; ++j) {
      double sum_gy = 0.0, sum_gy_xhat = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        sum_gy += gy.at(i, j);
        sum_gy_xhat += gy.at(i, j) * xhat.at(i, j);
      }
      gbeta.data[j] += sum_gy;
      ggamma.data[j] += sum_gy_xhat;
      const double g = gamma.data[j] * inv_std[j];
      if (train) {
        // Batch statistics depend on x, giving the centering terms.
        const double mean_gy = sum_gy / static_cast<double>(n);
        const double mean_gy_xhat = sum_gy_xhat / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
          gx.at(i, j) += g * (gy.at(i, j) - mean_gy - xhat.at(i, j) * mean_gy_xhat);
        }
      } else {
        for (std::size_t i = 0; i < n; ++i) gx.at(i, j) += g * gy.at(i, j);
      }
    }
  };
  return o;
}

Var Tape::max_pool_points(Var xv) {
  const Tensor& x = value(xv);
  require_rank2("max_pool_points", x);
  const std::size_t n = x.dim(0), k = x.dim(1);

  Tensor out({k});
  std::vector<std::size_t> argmax(k, 0);
  for (std::size_t j = 0; j < k; ++j) {
    double best = x.at(0, j);
    for (std::size_t i = 1; i < n; ++i) {
      if (x.at(i, j) > best) {  // strict > keeps the first row on ties
        best = x.at(i, j);
        argmax[j] = i;
      }
    }
    out.data[j] = best;
  }

  Var o = push(std::move(out));
  nodes_[o.id].backward = [this, xv, o, argmax = std::move(argmax), k]() {
    const Tensor& gy = nodes_[o.id].grad;
    Tensor& gx = grad_ref(xv);
    for (std::size_t j = 0; j < k; ++j) gx.at(argmax[j], j) += gy.data[j];
  };
  return o;
}

Var Tape::tanh(Var xv) {
  Tensor out = value(xv);
  for (double& v : out.data) v = std::tanh(v);
  Var o = push(std::move(out));
  nodes_[o.id].backward = [this, xv, o]() {
    const Tensor& t = nodes_[o.id].value;
    const Tensor& gy = nodes_[o.id].grad;
    Tensor& gx = grad_ref(xv);
    for (std::size_t i = 0; i < t.numel(); ++i) {
      gx.data[i] += gy.data[i] * (1.0 - t.data[i] * t.data[i]);
    }
  };
  return o;
}

Var Tape::softplus(Var xv) {
  Tensor out = value(xv);
  for (double& v : out.data) v = stable_softplus(v);
  Var o = push(std::move(out));
  nodes_[o.id].backward = [this, xv, o]() {
    const Tensor& x = value(xv);
    const Tensor& gy = nodes_[o.id].grad;
    Tensor& gx = grad_ref(xv);
    for (std::size_t i = 0; i < x.numel(); ++i) {
      gx.data[i] += gy.data[i] * stable_sigmoid(x.data[i]);
    }
  };
  return o;
}

Var Tape::sigmoid(Var xv) {
  Tensor out = value(xv);
  for (double& v : out.data) v = stable_sigmoid(v);
  Var o = push(std::move(out));
  nodes_[o.id].backward = [this, xv, o]() {
    const Tensor& s = nodes_[o.id].value;
    const Tensor& gy = nodes_[o.id].grad;
    Tensor& gx = grad_ref(xv);
    for (std::size_t i = 0; i < s.numel(); ++i) {
      gx.data[i] += gy.data[i] * s.data[i] * (1.0 - s.data[i]);
    }
  };
  return o;
}

namespace {
void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (!same_shape(a, b)) {
    shape_fail(op, shape_str(a.shape) + " vs " + shape_str(b.shape));
  }
}
}  // namespace

Var Tape::add(Var av, Var bv) {
  const Tensor& a = value(av);
  const Tensor& b = value(bv);
  require_same_shape("add", a, b);
  Tensor out = a;
  for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] += b.data[i];
  Var o = push(std::move(out));
  nodes_[o.id].backward = [this, av, bv, o]() {
    const Tensor& gy = nodes_[o.id].grad;
    Tensor& ga = grad_ref(av);
    Tensor& gb = grad_ref(bv);
    for (std::size_t i = 0; i < gy.numel(); ++i) {
      ga.data[i] += gy.data[i];
      gb.data[i] += gy.data[i];
    }
  };
  return o;
}

Var Tape::sub(Var av, Var bv) {
  const Tensor& a = value(av);
  const Tensor& b = value(bv);
  require_same_shape("sub", a, b);
  Tensor out = a;
  for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] -= b.data[i];
  Var o = push(std::move(out));
  nodes_[o.id].backward = [this, av, bv, o]() {
    const Tensor& gy = nodes_[o.id].grad;
    Tensor& ga = grad_ref(av);
    Tensor& gb = grad_ref(bv);
    for (std::size_t i = 0; i < gy.numel(); ++i) {
      ga.data[i] += gy.data[i];
      gb.data[i] -= gy.data[i];
    }
  };
  return o;
}

Var Tape::mul(Var av, Var bv) {
  const Tensor& a = value(av);
  const Tensor& b = value(bv);
  require_same_shape("mul", a, b);
  Tensor out = a;
  for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] *= b.data[i];
  Var o = push(std::move(out));
  nodes_[o.id].backward = [this, av, bv, o]() {
    const Tensor& a = value(av);
    const Tensor& b = value(bv);
    const Tensor& gy = nodes_[o.id].grad;
    Tensor& ga = grad_ref(av);
    Tensor& gb = grad_ref(bv);
    for (std::size_t i = 0; i < gy.numel(); ++i) {
      ga.data[i] += gy.data[i] * b.data[i];
      gb.data[i] += gy.data[i] * a.data[i];
    }
  };
  return o;
}

Var Tape::scale(Var xv, double a, double b) {
  Tensor out = value(xv);
  for (double& v : out.data) v = a * v + b;
  Var o = push(std::move(out));
  nodes_[o.id].backward = [this, xv, o, a]() {
    const Tensor& gy = nodes_[o.id].grad;
    Tensor& gx = grad_ref(xv);
    for (std::size_t i = 0; i < gy.numel(); ++i) gx.data[i] += a * gy.data[i];
  };
  return o;
}

Var Tape::channel_linear(Var wv, Var xv) {
  const Tensor& w = value(wv);
  const Tensor& x = value(xv);
  if (w.rank() != 3) shape_fail("channel_linear", "weight must be [k,o,i]");
  const std::size_t k = w.dim(0), od = w.dim(1), id = w.dim(2);
  const bool flat = x.rank() == 1;
  if (flat ? (x.dim(0) != k || id != 1) : (x.rank() != 2 || x.dim(0) != k || x.dim(1) != id)) {
    shape_fail("channel_linear", "w " + shape_str(w.shape) + " x " + shape_str(x.shape));
  }

  Tensor out({k, od});
  for (std::size_t ch = 0; ch < k; ++ch) {
    for (std::size_t oo = 0; oo < od; ++oo) {
      double acc = 0.0;
      for (std::size_t ii = 0; ii < id; ++ii) {
        acc += w.data[(ch * od + oo) * id + ii] * x.data[ch * id + ii];
      }
      out.at(ch, oo) = acc;
    }
  }

  Var o = push(std::move(out));
  nodes_[o.id].backward = [this, wv, xv, o, k, od, id]() {
    const Tensor& w = value(wv);
    const Tensor& x = value(xv);
    const Tensor& gy = nodes_[o.id].grad;
    Tensor& gw = grad_ref(wv);
    Tensor& gx = grad_ref(xv);
    for (std::size_t ch = 0; ch < k; ++ch) {
      for (std::size_t oo = 0; oo < od; ++oo) {
        const double g = gy.at(ch, oo);
        for (std::size_t ii = 0; ii < id; ++ii) {
          gw.data[(ch * od + oo) * id + ii] += g * x.data[ch * id + ii];
          gx.data[ch * id + ii] += g * w.data[(ch * od + oo) * id + ii];
        }
      }
    }
  };
  return o;
}

Var Tape::clamp_min(Var xv, double floor) {
  Tensor out = value(xv);
  for (double& v : out.data) v = v > floor ? v : floor;
  Var o = push(std::move(out));
  nodes_[o.id].backward = [this, xv, o, floor]() {
    const Tensor& x = value(xv);
    const Tensor& gy = nodes_[o.id].grad;
    Tensor& gx = grad_ref(xv);
    for (std::size_t i = 0; i < x.numel(); ++i) {
      if (x.data[i] > floor) gx.data[i] += gy.data[i];
    }
  };
  return o;
}

Var Tape::log(Var xv) {
  const Tensor& x = value(xv);
  Tensor out = x;
  for (double& v : out.data) {
    if (!(v > 0.0)) throw NumericError("log: non-positive input " + std::to_string(v));
    v = std::log(v);
  }
  Var o = push(std::move(out));
  nodes_[o.id].backward = [this, xv, o]() {
    const Tensor& x = value(xv);
    const Tensor& gy = nodes_[o.id].grad;
    Tensor& gx = grad_ref(xv);
    for (std::size_t i = 0; i < x.numel(); ++i) gx.data[i] += gy.data[i] / x.data[i];
  };
  return o;
}

Var Tape::sum(Var xv) {
  const Tensor& x = value(xv);
  double acc = 0.0;
  for (const double v : x.data) acc += v;
  Var o = push(Tensor::scalar(acc));
  nodes_[o.id].backward = [this, xv, o]() {
    const double g = nodes_[o.id].grad.data[0];
    Tensor& gx = grad_ref(xv);
    for (double& v : gx.data) v += g;
  };
  return o;
}

Var Tape::reshape(Var xv, std::vector<std::size_t> shape) {
  const Tensor& x = value(xv);
  if (shape_numel(shape) != x.numel()) {
    shape_fail("reshape", shape_str(x.shape) + " -> " + shape_str(shape));
  }
  Var o = push(Tensor(std::move(shape), x.data));
  nodes_[o.id].backward = [this, xv, o]() {
    const Tensor& gy = nodes_[o.id].grad;
    Tensor& gx = grad_ref(xv);
    for (std::size_t i = 0; i < gy.numel(); ++i) gx.data[i] += gy.data[i];
  };
  return o;
}

Var Tape::custom(Tensor value, std::vector<Var> deps,
                 std::function<void(Tape&, Var, const std::vector<Var>&)> backward) {
  Var o = push(std::move(value));
  nodes_[o.id].backward = [this, o, deps = std::move(deps), backward = std::move(backward)]() {
    backward(*this, o, deps);
  };
  return o;
}

}  // namespace pcac
