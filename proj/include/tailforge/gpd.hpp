#pragma once

#include <array>
#include <functional>
#include <span>
#include <vector>

#include "tailforge/empirical.hpp"
#include "tailforge/fit.hpp"

namespace tailforge {

// Below this |xi| the GPD expressions switch to their exponential limits.
inline constexpr double kXiEps = 1e-6;
// Box for GPD inference: xi in [kXiMin, kXiMax).
inline constexpr double kXiMin = -0.49;
inline constexpr double kXiMax = 5.0;

struct GpdParams {
  double xi = 0.0;
  double sigma = 1.0;

  double tau() const { return xi / sigma; }
  // Builds from (xi, tau); requires tau != 0 unless xi == 0.
  static GpdParams from_xi_tau(double xi, double tau);
};

// log(1 + xi x) / xi with its xi -> 0 limit x.
double log1p_ratio(double xi, double x);
// d/dxi of log1p_ratio.
double log1p_ratio_dxi(double xi, double x);

// (1 + tau y)^(-1/xi); 0 beyond a finite endpoint, 1 for y <= 0.
double gpd_tail(const GpdParams& p, double y);

// Survival of the exceedance y >= 0; throws beyond the finite endpoint.
double gpd_survival(const GpdParams& p, double y);

// Sum of GPD log densities; -infinity outside the support.
double gpd_loglik(const GpdParams& p, std::span<const double> y);
// Gradient with respect to (xi, log sigma).
std::array<double, 2> gpd_loglik_gradient(const GpdParams& p, std::span<const double> y);

// Pareto log likelihood for ratios y >= 1 with survival y^(-1/xi).
double pareto_loglik(double xi, std::span<const double> y);

// Classical GPD maximum likelihood on difference-mode exceedances (k >= 5).
FitResult fit_gpd_ml(const ExceedanceSet& y);

// Pareto maximum likelihood on ratio-mode exceedances; closed form (Hill).
FitResult fit_pareto_ml(const ExceedanceSet& y);

namespace detail {

// Maximizes an objective over (xi, log sigma) on data normalized to unit
// mean: simplex from the given starts, then Newton with the analytic gradient.
struct ThetaProblem {
  std::function<double(double xi, double log_sigma)> value;
  std::function<std::array<double, 2>(double xi, double log_sigma)> gradient;
};

struct ThetaOptimum {
  double xi = 0.0;
  double log_sigma = 0.0;
  double value = 0.0;
  bool converged = false;
  bool at_bound = false;  // xi held at an edge of the inference box
  int evaluations = 0;
};

// When an unconverged optimum sits at a xi edge of the box, maximizes over
// log sigma with xi on the edge and accepts the point when the xi slope
// points out of the box (a constrained stationary point).
void settle_on_edge(const ThetaProblem& problem, ThetaOptimum& opt, double gradient_tol);

ThetaOptimum maximize_theta(const ThetaProblem& problem, std::span<const std::array<double, 2>> starts,
                            double gradient_tol);

// Starting points for GPD-type fits on normalized data with maximum y_max.
std::vector<std::array<double, 2>> gpd_starts(std::span<const double> y_normalized);

// Profile-likelihood GPD fit on normalized data, returning (xi, log sigma).
std::array<double, 2> gpd_profile_start(std::span<const double> y_normalized);

bool theta_in_box(double xi, double log_sigma);

}  // namespace detail

}  // namespace tailforge
