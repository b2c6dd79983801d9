#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pcac/tensor.hpp"

namespace pcac {

/// Handle to a value on a Tape.
struct Var {
  std::uint32_t id = 0;
};

/// A trainable tensor living outside any tape. Tapes reference parameters via
/// Tape::param; Tape::backward accumulates into `grad`.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)) {
    grad = Tensor(value.shape);
  }
  void zero_grad() { std::fill(grad.data.begin(), grad.data.end(), 0.0); }
};

/// Reverse-mode tape. Nodes are appended in evaluation order; backward walks
/// them in reverse, so creation order is the topological order. Gradients
/// accumulate additively wherever a value fans out.
class Tape {
 public:
  // --- Leaves -------------------------------------------------------------
  Var constant(Tensor v);   // gradient computed but discarded
  Var input(Tensor v);      // gradient readable via grad() after backward()
  Var param(Parameter& p);  // gradient added to p.grad by backward()

  // --- Primitives ---------------------------------------------------------
  // out[i,j] = sum_k x[i,k] w[k,j] + b[j];  x:[n,a] w:[a,b] b:[b]
  Var linear(Var x, Var w, Var b);
  Var relu(Var x);
  // Per-channel normalization over the rows of x:[n,c]. Train mode uses batch
  // statistics (computed permutation-invariantly, see fixed-point note in the
  // implementation) and updates the caller-owned running statistics in place.
  // Infer mode normalizes by the running statistics. Running statistics are
  // not differentiated through.
  Var batch_norm(Var x, Var gamma, Var beta, Tensor& running_mean, Tensor& running_var,
                 bool train, double momentum = 0.9, double eps = 1e-5);
  // Columnwise max of x:[n,k] -> [k]; gradient routes to the first argmax row.
  Var max_pool_points(Var x);
  Var tanh(Var x);
  Var softplus(Var x);
  Var sigmoid(Var x);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);            // elementwise
  Var scale(Var x, double a, double b = 0.0);  // a*x + b
  // Batched per-channel matvec: w:[k,o,i] x:[k,i] -> [k,o]. A rank-1 x of
  // length k is treated as [k,1].
  Var channel_linear(Var w, Var x);
  Var clamp_min(Var x, double floor);  // gradient 0 where clamped
  Var log(Var x);                      // natural log; requires positive input
  Var sum(Var x);                      // all elements -> [1]
  Var reshape(Var x, std::vector<std::size_t> shape);  // same numel

  // Escape hatch for ops defined outside this module (e.g. Chamfer distance).
  // `backward` reads grad(out) and accumulates into grad_ref(dep).
  Var custom(Tensor value, std::vector<Var> deps,
             std::function<void(Tape&, Var out, const std::vector<Var>& deps)> backward);

  // --- Access -------------------------------------------------------------
  const Tensor& value(Var v) const;
  const Tensor& grad(Var v) const;  // valid after backward()
  Tensor& grad_ref(Var v);          // for custom backward closures

  /// Seeds d(loss)/d(loss) = 1 and runs every node's backward in reverse
  /// creation order, then adds leaf gradients into their Parameters.
  /// `loss` must be scalar.
  void backward(Var loss);

  void clear();
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::function<void()> backward;  // empty for leaves
    Parameter* external = nullptr;
  };

  Var push(Tensor value);
  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace pcac
