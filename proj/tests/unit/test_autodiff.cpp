#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "pcac/autodiff.hpp"
#include "pcac/errors.hpp"
#include "pcac/gradcheck.hpp"
#include "pcac/tensor.hpp"

using namespace pcac;

namespace {

Tensor random_tensor(std::vector<std::size_t> shape, std::mt19937_64& rng, double lo = -1.0,
                     double hi = 1.0) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> dist(lo, hi);
  for (double& v : t.data) v = dist(rng);
  return t;
}

// Random projection vector so the scalarized check exercises every output
// component with a distinct weight.
Tensor random_projection(const std::vector<std::size_t>& shape, std::mt19937_64& rng) {
  return random_tensor(shape, rng, 0.25, 1.0);
}

// f(x) = sum(projection ⊙ op(x)); returns (value_fn, analytic gradient at x).
template <typename BuildOp>
std::pair<std::function<double(const Tensor&)>, Tensor> projected_op(const BuildOp& build,
                                                                     const Tensor& x,
                                                                     const Tensor& projection) {
  const auto value_fn = [&build, &projection](const Tensor& xt) {
    Tape t;
    const Var out = build(t, t.input(xt));
    const Var s = t.sum(t.mul(out, t.constant(projection)));
    return t.value(s)[0];
  };
  Tape t;
  const Var xv = t.input(x);
  const Var out = build(t, xv);
  const Var s = t.sum(t.mul(out, t.constant(projection)));
  t.backward(s);
  return {value_fn, t.grad(xv)};
}

template <typename BuildOp>
double fd_error(const BuildOp& build, const Tensor& x, std::mt19937_64& rng) {
  Tape probe;
  const Tensor probe_out = probe.value(build(probe, probe.input(x)));
  const Tensor projection = random_projection(probe_out.shape, rng);
  const auto [value_fn, grad] = projected_op(build, x, projection);
  return finite_difference_check(value_fn, grad, x, 1e-5).max_rel_err;
}

}  // namespace

TEST_CASE("linear with identity weight and zero bias is the identity") {
  Tape t;
  const Var x = t.input(Tensor({2, 3}, {1, 2, 3, 4, 5, 6}));
  const Var w = t.constant(Tensor({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1}));
  const Var b = t.constant(Tensor({3}));
  const Var y = t.linear(x, w, b);
  CHECK(t.value(y).data == std::vector<double>{1, 2, 3, 4, 5, 6});
}

TEST_CASE("linear bias gradient of a summed output is the row count") {
  std::mt19937_64 rng(1);
  Tape t;
  const Var x = t.input(random_tensor({5, 3}, rng));
  const Var w = t.input(random_tensor({3, 4}, rng));
  const Var b = t.input(random_tensor({4}, rng));
  t.backward(t.sum(t.linear(x, w, b)));
  for (const double g : t.grad(b).data) CHECK(g == doctest::Approx(5.0));
}

TEST_CASE("linear gradients match finite differences") {
  std::mt19937_64 rng(2);
  const Tensor x0 = random_tensor({5, 3}, rng);
  const Tensor w0 = random_tensor({3, 4}, rng);
  const Tensor b0 = random_tensor({4}, rng);

  // With respect to the input.
  const auto wrt_x = [&](Tape& t, Var x) { return t.linear(x, t.constant(w0), t.constant(b0)); };
  CHECK(fd_error(wrt_x, x0, rng) < 1e-6);

  // With respect to the weight.
  const auto wrt_w = [&](Tape& t, Var w) { return t.linear(t.constant(x0), w, t.constant(b0)); };
  CHECK(fd_error(wrt_w, w0, rng) < 1e-6);

  // With respect to the bias.
  const auto wrt_b = [&](Tape& t, Var b) { return t.linear(t.constant(x0), t.constant(w0), b); };
  CHECK(fd_error(wrt_b, b0, rng) < 1e-6);
}

TEST_CASE("linear rejects mismatched shapes") {
  Tape t;
  const Var x = t.input(Tensor({2, 3}));
  const Var w = t.input(Tensor({4, 2}));
  const Var b = t.input(Tensor({2}));
  CHECK_THROWS_AS(t.linear(x, w, b), DataError);
}

TEST_CASE("relu forward and gradient conventions") {
  Tape t;
  const Var x = t.input(Tensor({4}, {-1.0, 2.0, 0.0, 3.5}));
  const Var y = t.relu(x);
  CHECK(t.value(y).data == std::vector<double>{0.0, 2.0, 0.0, 3.5});
  t.backward(t.sum(y));
  CHECK(t.grad(x).data == std::vector<double>{0.0, 1.0, 0.0, 1.0});  // 0 at the kink
}

TEST_CASE("relu gradient matches finite differences away from zero") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor x = random_tensor({3, 4}, rng);
    for (double& v : x.data) v += v >= 0.0 ? 0.2 : -0.2;  // keep clear of the kink
    const auto op = [](Tape& t, Var x) { return t.relu(x); };
    CHECK(fd_error(op, x, rng) < 1e-6);
  }
}

TEST_CASE("batch norm train mode standardizes each channel") {
  std::mt19937_64 rng(4);
  Tape t;
  const Var x = t.input(random_tensor({64, 3}, rng, -5.0, 5.0));
  const Var gamma = t.constant(Tensor({3}, {1, 1, 1}));
  const Var beta = t.constant(Tensor({3}));
  Tensor rm({3}), rv({3});
  const Var y = t.batch_norm(x, gamma, beta, rm, rv, /*train=*/true);
  const Tensor& out = t.value(y);
  for (std::size_t j = 0; j < 3; ++j) {
    double mean = 0.0, var = 0.0;
    for (std::size_t i = 0; i < 64; ++i) mean += out.at(i, j);
    mean /= 64.0;
    for (std::size_t i = 0; i < 64; ++i) var += (out.at(i, j) - mean) * (out.at(i, j) - mean);
    var /= 64.0;
    CHECK(mean == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(var == doctest::Approx(1.0).epsilon(1e-3));  // eps guard shifts variance slightly
  }
}

TEST_CASE("batch norm constant channel collapses to beta") {
  Tape t;
  const Var x = t.input(Tensor({4, 2}, {7, -1, 7, -1, 7, -1, 7, -1}));
  const Var gamma = t.constant(Tensor({2}, {3, 3}));
  const Var beta = t.constant(Tensor({2}, {0.5, -2.0}));
  Tensor rm({2}), rv({2});
  const Var y = t.batch_norm(x, gamma, beta, rm, rv, true);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(t.value(y).at(i, 0) == doctest::Approx(0.5));
    CHECK(t.value(y).at(i, 1) == doctest::Approx(-2.0));
  }
}

TEST_CASE("batch norm updates running statistics with momentum") {
  std::mt19937_64 rng(5);
  Tensor rm({2}), rv({2});
  rm.data = {1.0, 1.0};
  rv.data = {1.0, 1.0};
  Tape t;
  const Var x = t.input(Tensor({2, 2}, {0, 4, 2, 8}));  // means 1, 6; biased vars 1, 4
  const Var gamma = t.constant(Tensor({2}, {1, 1}));
  const Var beta = t.constant(Tensor({2}));
  t.batch_norm(x, gamma, beta, rm, rv, true, /*momentum=*/0.9);
  CHECK(rm.data[0] == doctest::Approx(0.9 * 1.0 + 0.1 * 1.0));
  CHECK(rm.data[1] == doctest::Approx(0.9 * 1.0 + 0.1 * 6.0));
  CHECK(rv.data[0] == doctest::Approx(0.9 * 1.0 + 0.1 * 1.0));
  CHECK(rv.data[1] == doctest::Approx(0.9 * 1.0 + 0.1 * 4.0));
}

TEST_CASE("batch norm gradients match finite differences") {
  std::mt19937_64 rng(6);
  const Tensor x0 = random_tensor({6, 3}, rng, -2.0, 2.0);
  const Tensor g0 = random_tensor({3}, rng, 0.5, 1.5);
  const Tensor b0 = random_tensor({3}, rng);

  for (const bool train : {true, false}) {
    Tensor rm({3}), rv({3});
    rv.data = {1.0, 1.0, 1.0};
    const auto wrt_x = [&](Tape& t, Var x) {
      return t.batch_norm(x, t.constant(g0), t.constant(b0), rm, rv, train);
    };
    CHECK(fd_error(wrt_x, x0, rng) < 1e-5);

    const auto wrt_gamma = [&](Tape& t, Var g) {
      return t.batch_norm(t.input(x0), g, t.constant(b0), rm, rv, train);
    };
    CHECK(fd_error(wrt_gamma, g0, rng) < 1e-5);

    const auto wrt_beta = [&](Tape& t, Var b) {
      return t.batch_norm(t.input(x0), t.constant(g0), b, rm, rv, train);
    };
    CHECK(fd_error(wrt_beta, b0, rng) < 1e-5);
  }
}

TEST_CASE("batch norm train mode requires two rows") {
  Tape t;
  const Var x = t.input(Tensor({1, 2}, {1, 2}));
  const Var gamma = t.constant(Tensor({2}, {1, 1}));
  const Var beta = t.constant(Tensor({2}));
  Tensor rm({2}), rv({2});
  CHECK_THROWS_AS(t.batch_norm(x, gamma, beta, rm, rv, true), DataError);
  CHECK_NOTHROW(t.batch_norm(x, gamma, beta, rm, rv, false));
}

TEST_CASE("batch norm train statistics are exactly permutation invariant") {
  std::mt19937_64 rng(7);
  const std::size_t n = 257;
  const Tensor x0 = random_tensor({n, 4}, rng, -10.0, 10.0);

  Tensor perm_x({n, 4});
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < 4; ++j) perm_x.at(i, j) = x0.at(perm[i], j);
  }

  const auto run = [](const Tensor& x) {
    Tape t;
    Tensor rm({4}), rv({4});
    const Var y = t.batch_norm(t.input(x), t.constant(Tensor({4}, {1, 1, 1, 1})),
                               t.constant(Tensor({4})), rm, rv, true);
    return std::pair{t.value(y), rm};
  };
  const auto [out_a, rm_a] = run(x0);
  const auto [out_b, rm_b] = run(perm_x);
  CHECK(rm_a.data == rm_b.data);  // bitwise equal statistics
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < 4; ++j) CHECK(out_b.at(i, j) == out_a.at(perm[i], j));
  }
}

TEST_CASE("max pool over points") {
  Tape t;
  SUBCASE("single row is the identity") {
    const Var x = t.input(Tensor({1, 3}, {4, -2, 0.5}));
    CHECK(t.value(t.max_pool_points(x)).data == std::vector<double>{4, -2, 0.5});
  }
  SUBCASE("column max with gradient mask on the argmax") {
    const Var x = t.input(Tensor({3, 1}, {1, 3, 2}));
    const Var y = t.max_pool_points(x);
    CHECK(t.value(y).data == std::vector<double>{3});
    t.backward(t.sum(y));
    CHECK(t.grad(x).data == std::vector<double>{0, 1, 0});
  }
  SUBCASE("ties route the gradient to the first argmax row") {
    const Var x = t.input(Tensor({3, 1}, {5, 5, 1}));
    const Var y = t.max_pool_points(x);
    t.backward(t.sum(y));
    CHECK(t.grad(x).data == std::vector<double>{1, 0, 0});
  }
  SUBCASE("row permutation leaves the output unchanged") {
    std::mt19937_64 rng(8);
    const Tensor x0 = random_tensor({10, 6}, rng);
    Tensor shuffled = x0;
    std::vector<std::size_t> perm(10);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t i = 0; i < 10; ++i) {
      for (std::size_t j = 0; j < 6; ++j) shuffled.at(i, j) = x0.at(perm[i], j);
    }
    Tape t2;
    const Tensor a = t2.value(t2.max_pool_points(t2.input(x0)));
    const Tensor b = t2.value(t2.max_pool_points(t2.input(shuffled)));
    CHECK(a.data == b.data);
  }
}

TEST_CASE("elementwise op values") {
  Tape t;
  const Var x = t.input(Tensor({3}, {-1.0, 0.0, 2.0}));
  CHECK(t.value(t.tanh(x)).data ==
        std::vector<double>{std::tanh(-1.0), 0.0, std::tanh(2.0)});
  CHECK(t.value(t.sigmoid(x))[1] == doctest::Approx(0.5));
  CHECK(t.value(t.softplus(x))[1] == doctest::Approx(std::log(2.0)));
  const Var y = t.input(Tensor({3}, {4.0, 5.0, 6.0}));
  CHECK(t.value(t.add(x, y)).data == std::vector<double>{3.0, 5.0, 8.0});
  CHECK(t.value(t.sub(y, x)).data == std::vector<double>{5.0, 5.0, 4.0});
  CHECK(t.value(t.mul(x, y)).data == std::vector<double>{-4.0, 0.0, 12.0});
  CHECK(t.value(t.scale(x, 2.0, 1.0)).data == std::vector<double>{-1.0, 1.0, 5.0});
  CHECK(t.value(t.clamp_min(x, 0.5)).data == std::vector<double>{0.5, 0.5, 2.0});
  CHECK(t.value(t.sum(y))[0] == doctest::Approx(15.0));
}

TEST_CASE("elementwise identity and zero cases") {
  Tape t;
  const Var zero = t.input(Tensor({2}, {0.0, 0.0}));
  CHECK(t.value(t.tanh(zero)).data == std::vector<double>{0.0, 0.0});
  CHECK(t.value(t.scale(zero, 5.0)).data == std::vector<double>{0.0, 0.0});
  const Var x = t.input(Tensor({2}, {1.5, -2.5}));
  CHECK(t.value(t.add(x, zero)).data == std::vector<double>{1.5, -2.5});
  CHECK(t.value(t.scale(x, 1.0)).data == std::vector<double>{1.5, -2.5});
  CHECK(t.value(t.mul(x, t.input(Tensor({2}, {0.0, 0.0})))).data ==
        std::vector<double>{0.0, -0.0});
}

TEST_CASE("every primitive passes finite differences over 100 random instances") {
  std::mt19937_64 rng(9);
  int instances = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const Tensor x = random_tensor({4, 3}, rng, -2.0, 2.0);
    const Tensor pos = random_tensor({4, 3}, rng, 0.5, 3.0);
    const Tensor other = random_tensor({4, 3}, rng, -2.0, 2.0);
    const Tensor cw = random_tensor({4, 2, 3}, rng);

    const std::function<Var(Tape&, Var)> ops[] = {
        [](Tape& t, Var v) { return t.tanh(v); },
        [](Tape& t, Var v) { return t.softplus(v); },
        [](Tape& t, Var v) { return t.sigmoid(v); },
        [&](Tape& t, Var v) { return t.add(v, t.constant(other)); },
        [&](Tape& t, Var v) { return t.sub(t.constant(other), v); },
        [&](Tape& t, Var v) { return t.mul(v, t.constant(other)); },
        [](Tape& t, Var v) { return t.scale(v, -1.7, 0.3); },
        [&](Tape& t, Var v) { return t.channel_linear(t.constant(cw), v); },
        [](Tape& t, Var v) { return t.max_pool_points(v); },
        [](Tape& t, Var v) { return t.relu(v); },
    };
    for (const auto& op : ops) {
      CHECK(fd_error(op, x, rng) < 1e-4);
      instances++;
    }

    // log and channel-weight gradients need their own operand domains.
    const auto log_op = [](Tape& t, Var v) { return t.log(v); };
    CHECK(fd_error(log_op, pos, rng) < 1e-4);
    const auto wrt_cw = [&](Tape& t, Var w) { return t.channel_linear(w, t.constant(x)); };
    CHECK(fd_error(wrt_cw, cw, rng) < 1e-4);
    instances += 2;
  }
  CHECK(instances >= 100);
}

TEST_CASE("channel linear applies one matrix per channel") {
  Tape t;
  // Two channels, each mapping R^2 -> R^2 with a distinct matrix.
  const Var w = t.input(Tensor({2, 2, 2}, {1, 0, 0, 1,    // channel 0: identity
                                           0, 2, 3, 0})); // channel 1: swap & scale
  const Var x = t.input(Tensor({2, 2}, {5, 7, 1, 4}));
  const Tensor& y = t.value(t.channel_linear(w, x));
  CHECK(y.data == std::vector<double>{5, 7, 8, 3});

  // Rank-1 input is treated as [k, 1].
  Tape t2;
  const Var w1 = t2.input(Tensor({3, 2, 1}, {1, 2, 3, 4, 5, 6}));
  const Var x1 = t2.input(Tensor({3}, {1, 10, 100}));
  CHECK(t2.value(t2.channel_linear(w1, x1)).data ==
        std::vector<double>{1, 2, 30, 40, 500, 600});
}

TEST_CASE("gradients accumulate additively at fan-out") {
  std::mt19937_64 rng(10);
  const Tensor x0 = random_tensor({5}, rng);
  Tape t;
  const Var x = t.input(x0);
  // y = sum(x*x) + sum(3x): dy/dx = 2x + 3.
  const Var y = t.add(t.sum(t.mul(x, x)), t.sum(t.scale(x, 3.0)));
  t.backward(y);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(t.grad(x)[i] == doctest::Approx(2.0 * x0[i] + 3.0).epsilon(1e-12));
  }
}

TEST_CASE("parameters harvest gradients across reuse") {
  Parameter p("w", Tensor({2}, {3.0, -1.0}));
  Tape t;
  const Var a = t.param(p);
  const Var b = t.param(p);  // same parameter fed twice
  t.backward(t.sum(t.mul(a, b)));  // d/dp sum(p^2) = 2p
  CHECK(p.grad.data == std::vector<double>{6.0, -2.0});
}

TEST_CASE("backward over a mixed graph stays finite") {
  std::mt19937_64 rng(11);
  Tape t;
  const Var x = t.input(random_tensor({8, 4}, rng, -3.0, 3.0));
  const Var w = t.input(random_tensor({4, 6}, rng));
  const Var b = t.input(random_tensor({6}, rng));
  Tensor rm({6}), rv({6});
  rv.data.assign(6, 1.0);
  const Var h = t.batch_norm(t.relu(t.linear(x, w, b)), t.input(random_tensor({6}, rng, 0.5, 1.5)),
                             t.input(random_tensor({6}, rng)), rm, rv, true);
  const Var pooled = t.max_pool_points(h);
  const Var s = t.sum(t.log(t.clamp_min(t.sigmoid(pooled), 1e-12)));
  t.backward(s);
  CHECK(all_finite(t.grad(x)));
  CHECK(all_finite(t.grad(w)));
  CHECK(all_finite(t.grad(b)));
}

TEST_CASE("finite difference harness on known functions") {
  // Linear functional: gradient is the coefficient vector, error ~ machine eps.
  const Tensor coeff({4}, {2.0, -3.0, 0.5, 1.0});
  const auto lin = [&coeff](const Tensor& x) {
    double s = 0.0;
    for (std::size_t i = 0; i < 4; ++i) s += coeff[i] * x[i];
    return s;
  };
  std::mt19937_64 rng(12);
  const Tensor at = random_tensor({4}, rng);
  CHECK(finite_difference_check(lin, coeff, at, 1e-5).max_rel_err < 1e-10);

  // Quadratic: f = sum x^2, grad 2x.
  const auto quad = [](const Tensor& x) {
    double s = 0.0;
    for (const double v : x.data) s += v * v;
    return s;
  };
  Tensor g2({4});
  for (std::size_t i = 0; i < 4; ++i) g2[i] = 2.0 * at[i];
  CHECK(finite_difference_check(quad, g2, at, 1e-5).max_rel_err < 1e-6);

  // ReLU probed exactly at zero: the kink coordinate must be excluded.
  const auto relu_sum = [](const Tensor& x) {
    double s = 0.0;
    for (const double v : x.data) s += v > 0.0 ? v : 0.0;
    return s;
  };
  const Tensor point({3}, {1.0, 0.0, -2.0});
  const Tensor grad_claim({3}, {1.0, 0.0, 0.0});
  const FdResult r = finite_difference_check(relu_sum, grad_claim, point, 1e-5);
  REQUIRE(r.excluded.size() == 1);
  CHECK(r.excluded[0] == 1);
  CHECK(r.max_rel_err < 1e-9);
}

TEST_CASE("log rejects non-positive input") {
  Tape t;
  const Var x = t.input(Tensor({2}, {1.0, -0.5}));
  CHECK_THROWS_AS(t.log(x), NumericError);
}
