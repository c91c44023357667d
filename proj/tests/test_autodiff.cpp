#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "pbc/adam.hpp"
#include "pbc/autodiff.hpp"
#include "pbc/linalg.hpp"
#include "pbc/rng.hpp"

using pbc::ad::Tape;
using pbc::ad::Value;

TEST_CASE("grad of x^2 at 3 is 6") {
  const double x[] = {3.0};
  auto g = pbc::ad::grad([](Tape&, std::span<const Value> v) { return square(v[0]); },
                         std::span<const double>(x));
  CHECK(g[0] == doctest::Approx(6.0).epsilon(1e-14));
}

TEST_CASE("grad of tanh at 0 is 1") {
  const double x[] = {0.0};
  auto g = pbc::ad::grad([](Tape&, std::span<const Value> v) { return tanh(v[0]); },
                         std::span<const double>(x));
  CHECK(g[0] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("min routes gradient to first attaining argument") {
  const double x[] = {2.0, 5.0};
  auto g = pbc::ad::grad([](Tape&, std::span<const Value> v) { return vmin(v[0], v[1]); },
                         std::span<const double>(x));
  CHECK(g[0] == 1.0);
  CHECK(g[1] == 0.0);

  // Brute-force one-sided directional differences agree at this point.
  auto f = [](std::span<const double> v) { return std::min(v[0], v[1]); };
  const double h = 1e-7;
  for (int i = 0; i < 2; ++i) {
    std::vector<double> xp(x, x + 2);
    xp[i] += h;
    const double fd = (f(xp) - f(std::span<const double>(x))) / h;
    CHECK(g[i] == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("ties at min/max go to the first argument, relu'(0) = 0") {
  const double x[] = {1.0, 1.0};
  auto g = pbc::ad::grad([](Tape&, std::span<const Value> v) { return vmax(v[0], v[1]); },
                         std::span<const double>(x));
  CHECK(g[0] == 1.0);
  CHECK(g[1] == 0.0);

  const double z[] = {0.0};
  auto gr = pbc::ad::grad([](Tape&, std::span<const Value> v) { return relu(v[0]); },
                          std::span<const double>(z));
  CHECK(gr[0] == 0.0);
}

TEST_CASE("grad_check on a quadratic form") {
  pbc::Rng rng(17);
  std::vector<double> x(6);
  for (double& v : x) v = rng.normal();
  auto f = [](Tape&, std::span<const Value> v) {
    Value acc = square(v[0]);
    for (std::size_t i = 1; i < v.size(); ++i) {
      acc = acc + square(v[i]) * 0.5 + v[i - 1] * v[i] * 0.25;
    }
    return acc;
  };
  CHECK(pbc::ad::grad_check(f, x, 1e-5) < 1e-6);
}

TEST_CASE("grad_check covers exp/log/sqrt/recip/dot compositions") {
  pbc::Rng rng(3);
  std::vector<double> x(8);
  for (double& v : x) v = 0.5 + rng.uniform();
  auto f = [](Tape& t, std::span<const Value> v) {
    const std::size_t h = v.size() / 2;
    Value d = dot(v.subspan(0, h), v.subspan(h));
    Value e = exp(v[0] * 0.3) + log(v[1] + 2.0) + sqrt(v[2] + 1.0) + recip(v[3] + 3.0);
    Value s = tanh(d * 0.1) + e;
    return s + t.constant(0.0);
  };
  CHECK(pbc::ad::grad_check(f, x, 1e-6) < 1e-7);
}

TEST_CASE("constant function has exactly zero gradient") {
  const double x[] = {1.5, -2.0};
  auto f = [](Tape& t, std::span<const Value>) { return t.constant(4.2); };
  auto g = pbc::ad::grad(f, std::span<const double>(x));
  CHECK(g[0] == 0.0);
  CHECK(g[1] == 0.0);
  CHECK(pbc::ad::grad_check(f, std::span<const double>(x), 1e-5) == 0.0);
}

TEST_CASE("forward NaN is reported") {
  const double x[] = {-1.0};
  CHECK_THROWS_AS(
      pbc::ad::grad([](Tape&, std::span<const Value> v) { return sqrt(v[0]); },
                    std::span<const double>(x)),
      pbc::ad::NumericalError);
}

TEST_CASE("tape evaluation is deterministic bit-for-bit") {
  pbc::Rng rng(99);
  std::vector<double> x(12);
  for (double& v : x) v = rng.normal();
  auto f = [](Tape&, std::span<const Value> v) {
    Value acc = tanh(v[0]);
    for (std::size_t i = 1; i < v.size(); ++i) acc = acc * 0.9 + tanh(v[i] * 0.3) * 0.1 + square(v[i]) * 0.01;
    return acc;
  };
  const auto g1 = pbc::ad::grad(f, x);
  const auto g2 = pbc::ad::grad(f, x);
  const double y1 = pbc::ad::eval(f, x);
  const double y2 = pbc::ad::eval(f, x);
  CHECK(y1 == y2);
  for (std::size_t i = 0; i < g1.size(); ++i) CHECK(g1[i] == g2[i]);
}

TEST_CASE("linear algebra building blocks differentiate") {
  pbc::Rng rng(5);
  std::vector<double> x(9 + 3);
  for (double& v : x) v = rng.normal() * 0.3;
  // f = || chol_solve(X X^T + I, b) ||^2, a stand-in for the weight-map algebra.
  auto f = [](Tape& t, std::span<const Value> v) {
    pbc::la::Matrix<Value> m(3, 3);
    for (int i = 0; i < 9; ++i) m.a[static_cast<std::size_t>(i)] = v[static_cast<std::size_t>(i)];
    auto g = pbc::la::matmul(m, pbc::la::transpose(m));
    for (int i = 0; i < 3; ++i) g(i, i) = g(i, i) + 1.0;
    auto l = pbc::la::cholesky(g);
    pbc::la::Matrix<Value> b(3, 1);
    for (int i = 0; i < 3; ++i) b(i, 0) = v[static_cast<std::size_t>(9 + i)];
    auto sol = pbc::la::chol_solve(l, b);
    Value acc = t.constant(0.0);
    for (int i = 0; i < 3; ++i) acc = acc + square(sol(i, 0));
    return acc;
  };
  CHECK(pbc::ad::grad_check(f, x, 1e-6) < 1e-6);
}

TEST_CASE("lu_solve matches chol_solve on an SPD system and differentiates") {
  pbc::Rng rng(11);
  std::vector<double> x(9 + 3);
  for (double& v : x) v = rng.normal() * 0.4;
  auto build = [](std::span<const Value> v) {
    pbc::la::Matrix<Value> m(3, 3);
    for (int i = 0; i < 9; ++i) m.a[static_cast<std::size_t>(i)] = v[static_cast<std::size_t>(i)];
    auto g = pbc::la::matmul(m, pbc::la::transpose(m));
    for (int i = 0; i < 3; ++i) g(i, i) = g(i, i) + 1.0;
    pbc::la::Matrix<Value> b(3, 1);
    for (int i = 0; i < 3; ++i) b(i, 0) = v[static_cast<std::size_t>(9 + i)];
    return std::pair(g, b);
  };
  {
    Tape t;
    auto vs = t.vars(x);
    auto [g, b] = build(std::span<const Value>(vs));
    auto x1 = pbc::la::lu_solve(g, b);
    auto x2 = pbc::la::chol_solve(pbc::la::cholesky(g), b);
    for (int i = 0; i < 3; ++i) {
      CHECK(t.value(x1(i, 0)) == doctest::Approx(t.value(x2(i, 0))).epsilon(1e-12));
    }
  }
  auto f = [&](Tape& t, std::span<const Value> v) {
    auto [g, b] = build(v);
    auto sol = pbc::la::lu_solve(g, b);
    Value acc = t.constant(0.0);
    for (int i = 0; i < 3; ++i) acc = acc + square(sol(i, 0));
    return acc;
  };
  CHECK(pbc::ad::grad_check(f, x, 1e-6) < 1e-6);
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  std::vector<double> theta{1.0, -2.0};
  std::vector<double> g{0.0, 0.0};
  pbc::ad::AdamState st(2, 1e-3);
  adam_step(theta, g, st);
  CHECK(theta[0] == 1.0);
  CHECK(theta[1] == -2.0);
}

TEST_CASE("adam: hand-computed first step on f(x)=x^2") {
  std::vector<double> theta{1.0};
  std::vector<double> g{2.0};  // f'(1) = 2
  pbc::ad::AdamState st(1, 1e-3);
  adam_step(theta, g, st);
  // Bias-corrected ratio is 1, so the step is lr * 2/(2 + eps).
  const double expected = 1.0 - 1e-3 * (2.0 / (2.0 + 1e-8));
  CHECK(theta[0] == doctest::Approx(expected).epsilon(1e-15));
}

TEST_CASE("adam: repeated constant-gradient steps decrease x monotonically") {
  std::vector<double> theta{1.0};
  pbc::ad::AdamState st(1, 1e-3);
  double prev = theta[0];
  for (int k = 0; k < 5; ++k) {
    std::vector<double> g{2.0 * theta[0]};
    adam_step(theta, g, st);
    CHECK(theta[0] < prev);
    prev = theta[0];
  }
}

TEST_CASE("gradient clipping caps the global norm") {
  std::vector<double> g{3.0, 4.0};
  const double norm = pbc::ad::clip_global_norm(g, 1.0);
  CHECK(norm == doctest::Approx(5.0));
  CHECK(std::hypot(g[0], g[1]) == doctest::Approx(1.0).epsilon(1e-12));
  std::vector<double> h{0.3, 0.4};
  pbc::ad::clip_global_norm(h, 1.0);
  CHECK(h[0] == 0.3);
  CHECK(h[1] == 0.4);
}
