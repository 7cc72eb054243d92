#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>

#include "tailforge/bernstein.hpp"
#include "tailforge/empirical.hpp"
#include "tailforge/fit.hpp"

namespace tailforge {

struct TransformOptions {
  double tol = 1e-6;  // relative change in log likelihood between iterations
  int max_iter = 50;
};

struct TransformFit {
  double xi = 0.0;
  std::optional<double> sigma;  // GPD track only
  std::optional<double> tau;
  BernsteinCdf g = BernsteinCdf::identity(1);
  std::size_t m = 1;
  int iterations = 0;
  bool converged = false;
  bool oscillation = false;
  double loglik = 0.0;
  std::string message;
};

// Objective of the (xi, sigma) update on excesses y with the transformation
// density g: sum log max(g'(H(y_j)), floor) + GPD log density. -inf outside
// the support.
double transform_loglik(std::span<const double> y, double xi, double sigma, const BernsteinCdf& g);
// Gradient with respect to (xi, log sigma).
std::array<double, 2> transform_loglik_gradient(std::span<const double> y, double xi, double sigma,
                                                const BernsteinCdf& g);

// Pareto-track objective on ratios y >= 1 with H(y) = y^(-1/xi).
double transform_pareto_loglik(std::span<const double> y, double xi, const BernsteinCdf& g);
double transform_pareto_derivative(std::span<const double> y, double xi, const BernsteinCdf& g);

// Iterative semiparametric fit: start at the classical ML fit, alternate a
// Bernstein fit of degree m to the transformed exceedances with a
// re-maximization of the parameters, until the likelihood settles.
TransformFit fit_transform(const ExceedanceSet& y, std::size_t m, Track track, const TransformOptions& opts = {});

}  // namespace tailforge
