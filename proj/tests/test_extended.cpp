#include <cmath>
#include <functional>
#include <memory>
#include <random>
#include <vector>

#include "doctest.h"
#include "tailforge/bias.hpp"
#include "tailforge/distributions.hpp"
#include "tailforge/empirical.hpp"
#include "tailforge/error.hpp"
#include "tailforge/extended.hpp"
#include "tailforge/gpd.hpp"

using namespace tailforge;

namespace {

double simpson(const std::function<double(double)>& f, double a, double b, int panels) {
  const double h = (b - a) / panels;
  double s = f(a) + f(b);
  for (int i = 1; i < panels; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

// Integral over (0,1) robust to integrable endpoint singularities:
// substitute u = t^4 so the Jacobian 4t^3 flattens u^(-r) for r < 1.
double integrate01(const std::function<double(double)>& f) {
  return simpson([&](double t) { return t <= 0.0 ? 0.0 : 4.0 * t * t * t * f(t * t * t * t); }, 0.0, 1.0, 10000);
}

std::vector<BiasFunction> bias_kinds() {
  return {BiasFunction::pareto(-0.5), BiasFunction::pareto(-2.0), BiasFunction::gpd(0.5, -1.0),
          BiasFunction::gpd(-0.2, -0.7), BiasFunction::gpd(0.0, -1.0), BiasFunction::gpd(1.0, -1.0),
          BiasFunction::bernstein(BernsteinCdf({0.0, 0.1, 0.5, 0.6, 1.0})),
          BiasFunction::bernstein(BernsteinCdf({0.0, 1.0, 1.0}))};
}

ExceedanceSet sorted_set(std::vector<double> v, ExceedanceMode mode) {
  std::sort(v.begin(), v.end(), std::greater<>());
  ExceedanceSet s;
  s.k = v.size();
  s.mode = mode;
  s.threshold = mode == ExceedanceMode::ratio ? 1.0 : 0.0;
  s.values = std::move(v);
  return s;
}

}  // namespace

TEST_CASE("Pareto bias examples") {
  CHECK(bias_B_pareto(-1.0, 0.5) == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(std::abs(bias_b_pareto(-1.0, 0.5)) < 1e-15);
  CHECK(bias_B_pareto(-0.5, 0.25) == doctest::Approx(-0.5).epsilon(1e-15));
  for (double rho : {-0.1, -1.0, -3.0}) CHECK(bias_B_pareto(rho, 1.0) == 0.0);
  CHECK_THROWS_AS(BiasFunction::pareto(0.0), Error);
  CHECK_THROWS_AS(BiasFunction::gpd(0.5, 0.1), Error);
}

TEST_CASE("GPD bias examples") {
  for (double xi0 : {-0.3, 0.0, 0.5, 1.0})
    for (double rt : {-0.5, -1.0, -2.0}) CHECK(std::abs(bias_B_gpd(xi0, rt, 1.0)) < 1e-12);
  const double integral = integrate01([](double u) { return bias_B_gpd(0.5, -1.0, u); });
  CHECK(integral == doctest::Approx(1.0 / 3.0).epsilon(1e-8));
}

TEST_CASE("GPD bias limit paths") {
  const double u = 0.5, rt = -1.0;
  const double limit = (1.0 / rt) * ((std::pow(u, -rt) - 1.0) / rt + std::log(u));
  CHECK(std::abs(bias_B_gpd(1e-8, rt, u) - limit) < 1e-6);
  CHECK(std::abs(bias_B_gpd(0.0, rt, u) - limit) < 1e-12);
  // xi0 + rho_tilde near zero.
  CHECK(std::abs(bias_B_gpd(1.0 + 1e-8, -1.0, u) - bias_B_gpd(1.0 + 1e-3, -1.0, u)) < 1e-3);
  CHECK(std::abs(bias_b_gpd(1e-8, rt, u) - bias_b_gpd(0.0, rt, u)) < 1e-6);
}

TEST_CASE("GPD bias companion is the derivative of u B(u)") {
  for (double xi0 : {-0.3, 0.0, 0.5, 1.0}) {
    for (double u : {0.05, 0.3, 0.7, 0.95}) {
      const double h = 1e-6;
      const double fd = ((u + h) * bias_B_gpd(xi0, -0.8, u + h) - (u - h) * bias_B_gpd(xi0, -0.8, u - h)) / (2 * h);
      CHECK(std::abs(bias_b_gpd(xi0, -0.8, u) - fd) < 1e-6);
    }
  }
}

TEST_CASE("Bernstein bias examples") {
  const auto id = BiasFunction::bernstein(BernsteinCdf::identity(6));
  for (double u : {0.01, 0.4, 1.0}) {
    CHECK(std::abs(id.b(u)) < 1e-12);
    CHECK(std::abs(id.B(u)) < 1e-12);
  }
  CHECK(std::abs(bias_from_bernstein_b(BernsteinCdf({0.0, 1.0, 1.0}), 0.5)) < 1e-15);
  CHECK(bias_from_bernstein_B(BernsteinCdf({0.0, 1.0, 1.0}), 0.5) == doctest::Approx(0.5));
}

TEST_CASE("bias invariants for every kind") {
  for (const auto& bias : bias_kinds()) {
    INFO(bias.name());
    CHECK(std::abs(bias.B(1.0)) < 1e-9);
    const double ib = integrate01([&](double u) { return bias.b(u); });
    CHECK(std::abs(ib) < 1e-8);
    const double iB = integrate01([&](double u) { return bias.B(u); });
    const double ilog = integrate01([&](double u) { return -std::log(u) * bias.b(u); });
    CHECK(std::abs(iB - ilog) < 1e-6);
    const double ib2 = integrate01([&](double u) { return bias.b(u) * bias.b(u); });
    CHECK(iB * iB <= ib2 + 1e-10);
  }
}

TEST_CASE("Pareto bias closed forms") {
  for (double rho : {-0.25, -0.5, -1.0, -2.0}) {
    const double iB = integrate01([&](double u) { return bias_B_pareto(rho, u); });
    const double ib2 = integrate01([&](double u) { return std::pow(bias_b_pareto(rho, u), 2); });
    CHECK(std::abs(iB - rho / (1.0 - rho)) < 1e-8);
    CHECK(std::abs(ib2 - rho * rho / (1.0 - 2.0 * rho)) < 1e-8);
  }
}

TEST_CASE("validity bounds keep the perturbed density positive") {
  for (const auto& bias : bias_kinds()) {
    if (bias.delta_min() == bias.delta_max()) continue;
    for (int i = 1; i < 1000; ++i) {
      const double u = i / 1000.0;
      CHECK(1.0 + bias.delta_min() * bias.b(u) >= 0.0);
      CHECK(1.0 + bias.delta_max() * bias.b(u) >= 0.0);
    }
  }
}

TEST_CASE("extended survival examples") {
  ExtendedFit fit;
  fit.method = Method::ep_plus;
  fit.xi = 0.5;
  fit.delta = 0.1;
  fit.bias = std::make_shared<BiasFunction>(BiasFunction::pareto(-0.5));
  CHECK(extended_survival(fit, 4.0) == doctest::Approx(0.0578125).epsilon(1e-14));

  ExtendedFit g;
  g.method = Method::ep;
  g.xi = 0.3;
  g.sigma = 1.7;
  g.delta = 0.0;
  g.bias = std::make_shared<BiasFunction>(BiasFunction::gpd(0.3, -1.0));
  for (double y : {0.0, 0.5, 3.0, 40.0}) CHECK(extended_survival(g, y) == gpd_survival({0.3, 1.7}, y));
}

TEST_CASE("extended survival is nonincreasing") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int t = 0; t < 20; ++t) {
    ExtendedFit fit;
    const bool pareto = t % 2 == 0;
    fit.method = pareto ? Method::ep_plus : Method::ep;
    fit.xi = 0.1 + unif(gen);
    if (!pareto) fit.sigma = 0.5 + unif(gen);
    auto bias = pareto ? BiasFunction::pareto(-0.2 - 2.0 * unif(gen)) : BiasFunction::gpd(fit.xi, -0.2 - 2.0 * unif(gen));
    fit.delta = bias.delta_min() + (bias.delta_max() - bias.delta_min()) * unif(gen);
    fit.bias = std::make_shared<BiasFunction>(bias);
    double prev = 1.0;
    for (int i = 0; i < 1000; ++i) {
      const double y = pareto ? 1.0 + i * 0.05 : i * 0.05;
      const double s = extended_survival(fit, y);
      CHECK(s <= prev + 1e-15);
      prev = s;
    }
  }
}

TEST_CASE("zero delta reduces to the base fits") {
  const Sample s(sample(DistributionSpec::burr(1, 2), 300, 13));
  ExtendedOptions opts;
  opts.fixed_delta = 0.0;
  for (std::size_t k : {30u, 100u, 250u}) {
    const auto ratio = exceedances(s, k, ExceedanceMode::ratio);
    const auto ep = fit_extended_pareto(ratio, BiasFunction::pareto(-0.5), opts);
    CHECK(std::abs(ep.xi - hill(s, k)) < 1e-8);
    const auto diff = exceedances(s, k, ExceedanceMode::difference);
    const auto base = fit_gpd_ml(diff);
    const auto eg = fit_extended_gpd(diff, BiasFunction::gpd(base.xi, -1.0), opts);
    CHECK(std::abs(eg.xi - base.xi) < 1e-8);
    CHECK(std::abs(*eg.sigma - *base.sigma) < 1e-8 * *base.sigma);
  }
}

TEST_CASE("zero delta likelihoods equal the base likelihoods") {
  const std::vector<double> ratios{1.1, 1.5, 2.0, 7.0};
  CHECK(extended_pareto_loglik(0.6, 0.0, BiasFunction::pareto(-1.0), ratios) == pareto_loglik(0.6, ratios));
  CHECK(extended_gpd_loglik(0.6, 2.0, 0.0, BiasFunction::gpd(0.6, -1.0), ratios) ==
        doctest::Approx(gpd_loglik({0.6, 2.0}, ratios)).epsilon(1e-14));
}

TEST_CASE("extended gradients match central differences") {
  const auto y = sample(DistributionSpec::gpd(0.4, 1.0), 100, 77);
  const auto bias = BiasFunction::gpd(0.4, -1.0);
  const double h = 1e-6;
  for (double delta : {-0.3, 0.0, 0.4}) {
    const double xi = 0.35, sigma = 1.1;
    const auto g = extended_gpd_gradient(xi, sigma, delta, bias, y);
    const auto f = [&](double a, double ls, double d) { return extended_gpd_loglik(a, std::exp(ls), d, bias, y); };
    const double ls = std::log(sigma);
    CHECK(g[0] == doctest::Approx((f(xi + h, ls, delta) - f(xi - h, ls, delta)) / (2 * h)).epsilon(1e-6));
    CHECK(g[1] == doctest::Approx((f(xi, ls + h, delta) - f(xi, ls - h, delta)) / (2 * h)).epsilon(1e-6));
    CHECK(g[2] == doctest::Approx((f(xi, ls, delta + h) - f(xi, ls, delta - h)) / (2 * h)).epsilon(1e-6));
  }
  std::vector<double> r;
  for (double v : y) r.push_back(1.0 + v);
  const auto pb = BiasFunction::pareto(-0.7);
  const auto gp = extended_pareto_gradient(0.5, 0.2, pb, r);
  CHECK(gp[0] == doctest::Approx((extended_pareto_loglik(0.5 + h, 0.2, pb, r) -
                                  extended_pareto_loglik(0.5 - h, 0.2, pb, r)) / (2 * h)).epsilon(1e-6));
  CHECK(gp[1] == doctest::Approx((extended_pareto_loglik(0.5, 0.2 + h, pb, r) -
                                  extended_pareto_loglik(0.5, 0.2 - h, pb, r)) / (2 * h)).epsilon(1e-6));
}

TEST_CASE("exact Pareto data give a vanishing delta") {
  std::vector<double> r = sample(DistributionSpec::pareto(1.0), 5000, 91);
  const auto set = sorted_set(r, ExceedanceMode::ratio);
  const auto f = fit_extended_pareto(set, BiasFunction::pareto(-1.0));
  CHECK(f.converged);
  CHECK(std::abs(*f.delta) < 0.1);
  double h = 0.0;
  for (double v : r) h += std::log(v);
  h /= r.size();
  CHECK(std::abs(f.xi - h) < 0.05);
}

TEST_CASE("exact GPD data give a vanishing delta matching the closed form") {
  const auto set = sorted_set(sample(DistributionSpec::gpd(0.5, 1.0), 5000, 92), ExceedanceMode::difference);
  const auto f = fit_extended_gpd(set, BiasFunction::gpd(0.5, -1.0));
  CHECK(f.converged);
  CHECK(std::abs(*f.delta) < 0.1);
  std::vector<double> u;
  for (double v : set.values) u.push_back(gpd_survival({f.xi, *f.sigma}, v));
  CHECK(std::abs(*f.delta - delta_closed_form(*f.bias, u)) < 1e-3);
}

TEST_CASE("profile over delta is exact") {
  const std::vector<double> b{-0.5, 0.2, 0.9, -0.1, 0.3};
  const auto [d, v] = profile_delta(b, -1.0, 1.5);
  double score = 0.0, val = 0.0;
  for (double x : b) {
    score += x / (1.0 + d * x);
    val += std::log1p(d * x);
  }
  CHECK(std::abs(score) < 1e-9);
  CHECK(v == doctest::Approx(val).epsilon(1e-12));
  // Maximum on the boundary when the score keeps its sign.
  const std::vector<double> pos{0.5, 0.2, 0.9};
  CHECK(profile_delta(pos, -1.0, 0.7)[0] == doctest::Approx(0.7));
}

TEST_CASE("extended fit preconditions") {
  CHECK_THROWS_AS(fit_extended_pareto(sorted_set({1.5, 2, 3, 4}, ExceedanceMode::ratio), BiasFunction::pareto(-1)),
                  Error);
  CHECK_THROWS_AS(extended_survival([] {
    ExtendedFit f;
    f.method = Method::ep_plus;
    f.xi = 0.5;
    return f;
  }(), 0.5), Error);
}
