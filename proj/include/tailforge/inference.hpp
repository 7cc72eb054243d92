#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "tailforge/bias.hpp"
#include "tailforge/empirical.hpp"
#include "tailforge/fit.hpp"

namespace tailforge {

// Integrals over (0,1) of b^2, B and u^xi B for a bias function.
struct MomentFunctionals {
  double EB = 0.0;
  double EC = 0.0;
  double Eb2 = 0.0;
  double xi = 0.0;  // weight exponent used for EC
};

// Numerical quadrature (double-exponential, handles the endpoint
// singularities of the parametric shapes).
MomentFunctionals functionals(const BiasFunction& bias, double xi);

// Closed forms for the parametric shapes.
MomentFunctionals pareto_functionals(double rho);
MomentFunctionals gpd_functionals(double xi, double rho_tilde);

// Asymptotic variance of the extended Pareto estimate of xi:
// xi^2 Eb2 / (Eb2 - EB^2) / k.
double var_xi_eplus(double xi, const MomentFunctionals& f, std::size_t k);

using Matrix2 = std::array<std::array<double, 2>, 2>;

// Asymptotic covariance of (xi, tau/tau_true - 1) for the extended GPD fit,
// divided by k. Throws when the design is singular.
Matrix2 cov_xi_tau_e(double xi, const MomentFunctionals& f, std::size_t k);

// Same, recomputing the functionals from the bias at xi. Near xi = 0 the
// direct formula is 0/0 and the value is extrapolated from symmetric
// neighbours, with the bias exponent moved along with xi.
Matrix2 cov_xi_tau_e(double xi, const BiasFunction& bias, std::size_t k);

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
};

// Normal-theory interval for xi from an extended-model fit.
Interval ci_xi(const FitResult& fit, const MomentFunctionals& f, double level);
// Functionals taken from the fit's own bias function.
Interval ci_xi(const FitResult& fit, double level);

struct TailEstimate {
  Method method = Method::gpd_ml;
  std::size_t k = 0;
  double value = 0.0;
  double threshold = 0.0;
};

// Estimate of P(X > c) for c at or above the threshold of the fit, clamped
// to [0, 1].
TailEstimate tail_prob(const FitResult& fit, double c, std::size_t n);

// Level c with tail_prob(fit, c, n) = p, for p < k/n.
TailEstimate tail_quantile(const FitResult& fit, double p, std::size_t n);

struct GofResult {
  std::vector<std::pair<double, double>> points;
  double correlation = 0.0;
};

// Transformed P-P plot of nonnegative data against a GPD(xi0, sigma0) start
// composed with a degree-m Bernstein transformation estimate.
GofResult gof_pp(const Sample& sample, double xi0, double sigma0, std::size_t m);

double pearson_correlation(std::span<const std::pair<double, double>> points);

}  // namespace tailforge
