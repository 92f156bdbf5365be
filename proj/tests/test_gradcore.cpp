#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "flowdistill/gradcheck.hpp"
#include "flowdistill/graph.hpp"
#include "flowdistill/kernels.hpp"
#include "flowdistill/rng.hpp"
#include "flowdistill/tensor.hpp"

using namespace fd;

namespace {

TensorD random_tensor(std::vector<int64_t> shape, SplitMix64& rng, double lo = -1.0, double hi = 1.0) {
  TensorD t(std::move(shape));
  rng.fill_uniform(t.data(), t.numel(), lo, hi);
  return t;
}

}  // namespace

TEST_CASE("matmul forward") {
  GraphD g;
  NodeId eye = g.input(TensorD({2, 2}, {1, 0, 0, 1}));
  NodeId a = g.input(TensorD({2, 2}, {1, 2, 3, 4}));
  NodeId prod = g.matmul(eye, a);
  CHECK(g.value(prod).values == std::vector<double>{1, 2, 3, 4});

  NodeId b = g.input(TensorD({2, 1}, {5, 6}));
  NodeId ab = g.matmul(a, b);
  CHECK(g.value(ab).values == std::vector<double>{17, 39});
}

TEST_CASE("matmul shape mismatch names both shapes") {
  GraphD g;
  NodeId a = g.input(TensorD({2, 3}));
  NodeId b = g.input(TensorD({2, 3}));
  CHECK_THROWS_WITH_AS(g.matmul(a, b), doctest::Contains("2x3"), ShapeError);
}

TEST_CASE("softplus values") {
  GraphD g;
  NodeId x = g.input(TensorD({3}, {0.0, 100.0, -50.0}));
  const auto& y = g.value(g.softplus(x));
  CHECK(y[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(y[1] == doctest::Approx(100.0).epsilon(1e-6));
  // series oracle: ln(1+e^x) = e^x - e^{2x}/2 + ... for very negative x
  CHECK(std::abs(y[2] - std::exp(-50.0)) <= std::exp(-50.0) * 1e-6);
  for (double v : y.values) CHECK(v > 0.0);
}

TEST_CASE("gather_rows") {
  GraphD g;
  NodeId table = g.input(TensorD({2, 2}, {1, 2, 3, 4}));
  NodeId picked = g.gather_rows(table, {1, 1, 0});
  CHECK(g.value(picked).shape == std::vector<int64_t>{3, 2});
  CHECK(g.value(picked).values == std::vector<double>{3, 4, 3, 4, 1, 2});

  NodeId empty = g.gather_rows(table, {});
  CHECK(g.value(empty).shape == std::vector<int64_t>{0, 2});
  CHECK(g.value(empty).numel() == 0);

  CHECK_THROWS_WITH_AS(g.gather_rows(table, {2}), doctest::Contains("index 2"), BoundsError);
}

TEST_CASE("backward product rule") {
  GraphD g;
  NodeId x = g.param(TensorD::scalar(2.0));
  NodeId y = g.param(TensorD::scalar(3.0));
  NodeId f = g.reduce_sum(g.mul(x, y));
  auto grads = g.backward(f);
  CHECK(grads.at(x)[0] == doctest::Approx(3.0));
  CHECK(grads.at(y)[0] == doctest::Approx(2.0));
}

TEST_CASE("backward dead relu unit") {
  GraphD g;
  NodeId x = g.param(TensorD::scalar(-5.0));
  NodeId f = g.reduce_sum(g.relu(x));
  auto grads = g.backward(f);
  CHECK(grads.at(x)[0] == 0.0);
}

TEST_CASE("backward rejects non-scalar loss and double sweeps") {
  GraphD g;
  NodeId x = g.param(TensorD({2}, {1, 2}));
  NodeId y = g.relu(x);
  CHECK_THROWS_AS(g.backward(y), ContractError);
  NodeId s = g.reduce_sum(y);
  g.backward(s);
  CHECK_THROWS_AS(g.backward(s), ContractError);
}

TEST_CASE("mean-abs gradient matches finite differences") {
  SplitMix64 rng(42);
  TensorD x = random_tensor({4}, rng);
  TensorD y = random_tensor({4}, rng);
  auto build = [&](auto& g, auto& ids) {
    NodeId yc = as_input(g, y);
    return g.reduce_mean(g.abs_op(g.sub(ids.at("x"), yc)));
  };
  auto rep = grad_check<double>({{"x", &x}}, build, 1e-6);
  CHECK(rep.max_rel_err < 1e-6);
}

TEST_CASE("grad_check quadratic is exact to rounding") {
  SplitMix64 rng(7);
  TensorD x = random_tensor({6}, rng);
  auto build = [](auto& g, auto& ids) {
    return g.reduce_sum(g.square(ids.at("x")));
  };
  auto rep = grad_check<double>({{"x", &x}}, build, 1e-5);
  CHECK(rep.max_rel_err < 1e-8);
}

TEST_CASE("grad_check rejects eps = 0") {
  TensorD x = TensorD::scalar(1.0);
  auto build = [](auto& g, auto& ids) { return g.reduce_sum(ids.at("x")); };
  CHECK_THROWS_AS(grad_check<double>({{"x", &x}}, build, 0.0), ContractError);
}

// Every primitive's analytic gradient vs central differences on random input.
TEST_CASE("per-primitive gradients match finite differences") {
  SplitMix64 rng(123);
  const double tol = 1e-4;

  auto check = [&](const char* name, auto build, TensorD x) {
    auto rep = grad_check<double>({{"x", &x}}, build, 1e-6);
    INFO(name);
    CHECK(rep.max_rel_err < tol);
  };

  TensorD other = random_tensor({3, 4}, rng);
  TensorD row = random_tensor({4}, rng);
  TensorD w = random_tensor({4, 2}, rng);

  check("matmul_lhs", [&](auto& g, auto& ids) {
    return g.reduce_sum(g.square(g.matmul(ids.at("x"), as_input(g, w))));
  }, random_tensor({3, 4}, rng));
  check("matmul_rhs", [&](auto& g, auto& ids) {
    return g.reduce_sum(g.square(g.matmul(as_input(g, other), ids.at("x"))));
  }, random_tensor({4, 2}, rng));
  check("add", [&](auto& g, auto& ids) {
    return g.reduce_sum(g.square(g.add(ids.at("x"), as_input(g, other))));
  }, random_tensor({3, 4}, rng));
  check("add_bcast_small", [&](auto& g, auto& ids) {
    return g.reduce_sum(g.square(g.add(as_input(g, other), ids.at("x"))));
  }, random_tensor({4}, rng));
  check("sub_lhs", [&](auto& g, auto& ids) {
    return g.reduce_sum(g.square(g.sub(ids.at("x"), as_input(g, other))));
  }, random_tensor({3, 4}, rng));
  check("sub_rhs_bcast", [&](auto& g, auto& ids) {
    return g.reduce_sum(g.square(g.sub(as_input(g, other), ids.at("x"))));
  }, random_tensor({4}, rng));
  check("mul", [&](auto& g, auto& ids) {
    return g.reduce_sum(g.square(g.mul(ids.at("x"), as_input(g, other))));
  }, random_tensor({3, 4}, rng));
  check("mul_bcast_small", [&](auto& g, auto& ids) {
    return g.reduce_sum(g.square(g.mul(as_input(g, other), ids.at("x"))));
  }, random_tensor({4}, rng));
  check("mul_scalar_operand", [&](auto& g, auto& ids) {
    return g.reduce_sum(g.square(g.mul(as_input(g, other), ids.at("x"))));
  }, random_tensor({1}, rng));
  check("concat_slice", [&](auto& g, auto& ids) {
    NodeId cat = g.concat_last({ids.at("x"), as_input(g, other)});
    return g.reduce_sum(g.square(g.slice_last(cat, 2, 4)));
  }, random_tensor({3, 4}, rng));
  check("gather", [&](auto& g, auto& ids) {
    return g.reduce_sum(g.square(g.gather_rows(ids.at("x"), {0, 2, 2, 1})));
  }, random_tensor({3, 4}, rng));
  check("relu", [&](auto& g, auto& ids) {
    return g.reduce_sum(g.square(g.relu(ids.at("x"))));
  }, random_tensor({3, 4}, rng, 0.2, 1.0));  // biased away from the kink
  check("softplus", [&](auto& g, auto& ids) {
    return g.reduce_sum(g.square(g.softplus(ids.at("x"))));
  }, random_tensor({3, 4}, rng));
  check("exp", [&](auto& g, auto& ids) {
    return g.reduce_sum(g.square(g.exp_op(ids.at("x"))));
  }, random_tensor({3, 4}, rng));
  check("log", [&](auto& g, auto& ids) {
    return g.reduce_sum(g.square(g.log_op(ids.at("x"))));
  }, random_tensor({3, 4}, rng, 0.5, 2.0));
  check("abs", [&](auto& g, auto& ids) {
    return g.reduce_sum(g.square(g.abs_op(ids.at("x"))));
  }, random_tensor({3, 4}, rng, 0.2, 1.0));
  check("sqrt", [&](auto& g, auto& ids) {
    return g.reduce_sum(g.square(g.sqrt_op(ids.at("x"))));
  }, random_tensor({3, 4}, rng, 0.5, 2.0));
  check("reduce_mean", [&](auto& g, auto& ids) {
    return g.reduce_mean(g.square(ids.at("x")));
  }, random_tensor({3, 4}, rng));
  check("reshape", [&](auto& g, auto& ids) {
    return g.reduce_sum(g.square(g.reshape(ids.at("x"), {4, 3})));
  }, random_tensor({3, 4}, rng));
  check("scale", [&](auto& g, auto& ids) {
    return g.reduce_sum(g.square(g.scale(ids.at("x"), 2.5)));
  }, random_tensor({3, 4}, rng));
  check("scalar_row_add", [&](auto& g, auto& ids) {
    return g.reduce_sum(g.square(g.add(g.matmul(as_input(g, other), as_input(g, w)), ids.at("x"))));
  }, random_tensor({2}, rng));
}

TEST_CASE("forward evaluation is deterministic") {
  SplitMix64 rng(9);
  TensorD a = random_tensor({8, 8}, rng);
  TensorD b = random_tensor({8, 8}, rng);
  auto run = [&]() {
    GraphD g;
    NodeId out = g.softplus(g.matmul(g.input(a), g.input(b)));
    return g.value(out).values;
  };
  CHECK(run() == run());
}

TEST_CASE("concat then slice round-trips exactly") {
  SplitMix64 rng(11);
  for (int rep = 0; rep < 10; ++rep) {
    const int64_t rows = 1 + rng.below(5);
    const int64_t w1 = 1 + rng.below(4);
    const int64_t w2 = 1 + rng.below(4);
    const int64_t w3 = 1 + rng.below(4);
    TensorD p1 = random_tensor({rows, w1}, rng);
    TensorD p2 = random_tensor({rows, w2}, rng);
    TensorD p3 = random_tensor({rows, w3}, rng);
    GraphD g;
    NodeId cat = g.concat_last({g.input(p1), g.input(p2), g.input(p3)});
    CHECK(g.value(g.slice_last(cat, 0, w1)).values == p1.values);
    CHECK(g.value(g.slice_last(cat, w1, w2)).values == p2.values);
    CHECK(g.value(g.slice_last(cat, w1 + w2, w3)).values == p3.values);
  }
}

TEST_CASE("reduce_mean times count equals reduce_sum") {
  SplitMix64 rng(13);
  for (int rep = 0; rep < 10; ++rep) {
    TensorD x = random_tensor({2 + rng.below(6), 1 + rng.below(7)}, rng, -10.0, 10.0);
    GraphD g;
    NodeId xn = g.input(x);
    const double mean = g.scalar_value(g.reduce_mean(xn));
    const double sum = g.scalar_value(g.reduce_sum(xn));
    CHECK(mean * static_cast<double>(x.numel()) ==
          doctest::Approx(sum).epsilon(1e-6));
  }
}

TEST_CASE("log rejects non-positive input, sqrt rejects negative") {
  GraphD g;
  NodeId z = g.input(TensorD({2}, {1.0, 0.0}));
  CHECK_THROWS_AS(g.log_op(z), NumericError);
  NodeId neg = g.input(TensorD({1}, {-1.0}));
  CHECK_THROWS_AS(g.sqrt_op(neg), NumericError);
}

TEST_CASE("parallel and serial kernels agree bit-for-bit") {
  SplitMix64 rng(5150);
  Tensor a({64, 96});
  Tensor b({96, 80});
  rng.fill_uniform(a.data(), a.numel(), -2.0, 2.0);
  rng.fill_uniform(b.data(), b.numel(), -2.0, 2.0);

  auto run_all = [&]() {
    Graph g;
    NodeId an = g.input(a);
    NodeId bn = g.input(b);
    NodeId mm = g.matmul(an, bn);
    NodeId act = g.softplus(g.relu(mm));
    NodeId sq = g.square(g.sub(act, g.scale(mm, 0.5f)));
    return g.value(sq).values;
  };

  kernels::set_parallel(true);
  auto par = run_all();
  kernels::set_parallel(false);
  auto ser = run_all();
  kernels::set_parallel(true);
  CHECK(par == ser);
}
