#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "tailforge/optimize.hpp"

using namespace tailforge;

namespace {

double rosen(std::span<const double> x) {
  return -(100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2));
}

std::vector<double> rosen_grad(std::span<const double> x) {
  return {400.0 * x[0] * (x[1] - x[0] * x[0]) + 2.0 * (1.0 - x[0]), -200.0 * (x[1] - x[0] * x[0])};
}

}  // namespace

TEST_CASE("simplex finds the Rosenbrock optimum") {
  const std::vector<double> steps{0.5, 0.5};
  const auto r = simplex_maximize(rosen, {-1.2, 1.0}, steps);
  CHECK(r.converged);
  CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(r.x[1] == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("simplex respects infeasible regions") {
  const Objective f = [](std::span<const double> x) {
    if (x[0] <= 0.0) return -std::numeric_limits<double>::infinity();
    return std::log(x[0]) - x[0];
  };
  const std::vector<double> steps{0.5};
  const auto r = simplex_maximize(f, {0.2}, steps);
  CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("Newton polish reaches the gradient tolerance") {
  NewtonOptions opts;
  opts.gradient_tol = 1e-10;
  opts.max_iterations = 200;
  const auto r = newton_polish(rosen, rosen_grad, {0.8, 0.6}, opts);
  CHECK(r.converged);
  CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(r.value >= rosen(std::vector<double>{0.8, 0.6}));
}

TEST_CASE("Newton polish escapes a convex stretch") {
  // Two maxima with a convex valley between them; the start sits on the
  // convex side where a barely-shifted Hessian would give a huge step.
  const Objective f = [](std::span<const double> x) { return -std::pow(x[0] * x[0] - 1.0, 2); };
  const Gradient g = [](std::span<const double> x) { return std::vector<double>{-4.0 * x[0] * (x[0] * x[0] - 1.0)}; };
  const auto r = newton_polish(f, g, {0.3});
  CHECK(r.converged);
  CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("Newton polish never decreases the objective") {
  const Objective f = [](std::span<const double> x) { return -std::cosh(x[0]) - 0.1 * x[0] * x[0] * x[0] * x[0]; };
  const Gradient g = [](std::span<const double> x) {
    return std::vector<double>{-std::sinh(x[0]) - 0.4 * x[0] * x[0] * x[0]};
  };
  const double start = f(std::vector<double>{3.0});
  const auto r = newton_polish(f, g, {3.0});
  CHECK(r.value >= start);
  CHECK(std::abs(r.x[0]) < 1e-6);
}

TEST_CASE("numeric gradient") {
  const auto g = numeric_gradient(rosen, std::vector<double>{0.3, -0.2});
  const auto a = rosen_grad(std::vector<double>{0.3, -0.2});
  CHECK(g[0] == doctest::Approx(a[0]).epsilon(1e-7));
  CHECK(g[1] == doctest::Approx(a[1]).epsilon(1e-7));
}

TEST_CASE("Brent maximization") {
  const auto r = brent_maximize([](double x) { return std::sin(x); }, 0.0, 3.0);
  CHECK(r.x[0] == doctest::Approx(M_PI / 2).epsilon(1e-7));
  CHECK(r.value == doctest::Approx(1.0).epsilon(1e-14));
}
