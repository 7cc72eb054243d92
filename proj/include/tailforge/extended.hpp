#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>

#include "tailforge/bias.hpp"
#include "tailforge/empirical.hpp"
#include "tailforge/fit.hpp"

namespace tailforge {

// Extended-model fits carry (xi, tau, delta) and the bias function used.
using ExtendedFit = FitResult;

struct ExtendedOptions {
  // Hold delta at this value instead of estimating it.
  std::optional<double> fixed_delta;
  // A classical fit at the same k to start from (GPD track).
  std::optional<FitResult> start;
};

// Log likelihood of the extended Pareto model on ratio exceedances:
// sum log(1 + delta b(Y^(-1/xi))) + sum log((1/xi) Y^(-1-1/xi)).
double extended_pareto_loglik(double xi, double delta, const BiasFunction& bias, std::span<const double> y);
// Gradient with respect to (xi, delta).
std::array<double, 2> extended_pareto_gradient(double xi, double delta, const BiasFunction& bias,
                                               std::span<const double> y);

// Log likelihood of the extended GPD model on excesses.
double extended_gpd_loglik(double xi, double sigma, double delta, const BiasFunction& bias,
                           std::span<const double> y);
// Gradient with respect to (xi, log sigma, delta).
std::array<double, 3> extended_gpd_gradient(double xi, double sigma, double delta, const BiasFunction& bias,
                                            std::span<const double> y);

// First-order closed form for delta given the transformed exceedances u_j:
// sum b(u_j) / sum b(u_j)^2.
double delta_closed_form(const BiasFunction& bias, std::span<const double> u);

// Exact maximizer over delta of sum log(1 + delta b_j) within the validity
// bounds of the bias function. Returns (delta, value).
std::array<double, 2> profile_delta(std::span<const double> b_values, double lo, double hi);

ExtendedFit fit_extended_pareto(const ExceedanceSet& y, const BiasFunction& bias, const ExtendedOptions& opts = {});
ExtendedFit fit_extended_gpd(const ExceedanceSet& y, const BiasFunction& bias, const ExtendedOptions& opts = {});

// Conditional survival of the fitted extended model at exceedance y (ratio
// scale on the Pareto track, excess scale on the GPD track), clamped to [0,1].
double extended_survival(const ExtendedFit& fit, double y);

// Number of clamping events in extended_survival since program start.
std::uint64_t survival_clamp_count();

}  // namespace tailforge
