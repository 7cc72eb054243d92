#include "tailforge/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "tailforge/distributions.hpp"
#include "tailforge/error.hpp"
#include "tailforge/gpd.hpp"

namespace tailforge {

namespace {

template <class F>
double integrate_unit(F f) {
  thread_local boost::math::quadrature::tanh_sinh<double> integrator;
  return integrator.integrate(f, 0.0, 1.0, 1e-14);
}

// Below this |xi| the extended-GPD covariance is extrapolated.
constexpr double kLimitBand = 0.02;
constexpr double kLimitStep = 0.01;

double survival_scale(const FitResult& fit, double c) {
  if (track_of(fit.method) == Track::pareto) {
    require(fit.threshold > 0.0, "Pareto-track fit needs a positive threshold");
    return std::pow(c / fit.threshold, -1.0 / fit.xi);
  }
  require(fit.sigma.has_value(), "GPD-track fit lacks a scale");
  return gpd_tail({fit.xi, *fit.sigma}, c - fit.threshold);
}

}  // namespace

MomentFunctionals functionals(const BiasFunction& bias, double xi) {
  require(std::isfinite(xi) && xi > -0.5, "functionals need xi > -1/2");
  MomentFunctionals f;
  f.xi = xi;
  f.EB = integrate_unit([&](double u) { return bias.B(u); });
  f.EC = integrate_unit([&](double u) { return std::pow(u, xi) * bias.B(u); });
  f.Eb2 = integrate_unit([&](double u) {
    const double v = bias.b(u);
    return v * v;
  });
  if (!std::isfinite(f.EB) || !std::isfinite(f.EC) || !std::isfinite(f.Eb2))
    fail(ErrorKind::degenerate, "bias functionals are not finite");
  return f;
}

MomentFunctionals pareto_functionals(double rho) {
  require(rho < 0.0, "rho must be negative");
  MomentFunctionals f;
  f.EB = rho / (1.0 - rho);
  f.Eb2 = rho * rho / (1.0 - 2.0 * rho);
  f.EC = std::numeric_limits<double>::quiet_NaN();
  return f;
}

MomentFunctionals gpd_functionals(double xi, double rt) {
  require(rt < 0.0, "rho tilde must be negative");
  require(xi > -0.5, "xi must exceed -1/2");
  MomentFunctionals f;
  f.xi = xi;
  f.EB = 1.0 / ((1.0 + xi) * (1.0 - rt));
  f.EC = 1.0 / ((1.0 + xi) * (1.0 + 2.0 * xi) * (xi - rt + 1.0));
  f.Eb2 = 2.0 / ((1.0 + 2.0 * xi) * (1.0 - 2.0 * rt) * (xi - rt + 1.0));
  return f;
}

double var_xi_eplus(double xi, const MomentFunctionals& f, std::size_t k) {
  require(k >= 1, "k must be positive");
  const double den = f.Eb2 - f.EB * f.EB;
  // b is O(1); an Eb2 at rounding level means b vanishes.
  if (!(den > 1e-14 * std::max(f.Eb2, 1e-300)) || !(f.Eb2 > 1e-20))
    fail(ErrorKind::degenerate, "Eb2 - EB^2 vanishes; the bias function carries no information");
  return xi * xi * f.Eb2 / den / static_cast<double>(k);
}

Matrix2 cov_xi_tau_e(double xi, const MomentFunctionals& f, std::size_t k) {
  require(k >= 1, "k must be positive");
  require(xi > -0.5, "covariance needs xi > -1/2");
  if (!(f.Eb2 > 1e-20)) fail(ErrorKind::degenerate, "Eb2 vanishes; the bias function carries no information");
  const double p = 1.0 + xi;
  const double a = 1.0 / (p * p * (1.0 + 2.0 * xi)) - f.EC * f.EC / f.Eb2;
  const double e = 1.0 - f.EB * f.EB / f.Eb2;
  const double m = 1.0 / (p * p) - f.EB * f.EC / f.Eb2;
  const double d = a * e - m * m;
  if (!(std::abs(d) > 1e-13) || xi == 0.0) fail(ErrorKind::degenerate, "singular design: D is zero");
  const double kk = static_cast<double>(k);
  Matrix2 s;
  s[0][0] = xi * xi * a / d / kk;
  s[0][1] = s[1][0] = xi * (1.0 / (p * p * p) - f.EB * f.EC / (f.Eb2 * p)) / d / kk;
  s[1][1] = e / (p * p) / d / kk;
  return s;
}

Matrix2 cov_xi_tau_e(double xi, const BiasFunction& bias, std::size_t k) {
  if (std::abs(xi) >= kLimitBand) return cov_xi_tau_e(xi, functionals(bias, xi), k);

  // Even part around xi, two Richardson levels in h^2.
  const double xi0 = std::holds_alternative<GpdBias>(bias.kind()) ? std::get<GpdBias>(bias.kind()).xi0 : 0.0;
  auto at = [&](double shift) {
    const BiasFunction moved = bias.with_xi0(xi0 + shift);
    return cov_xi_tau_e(xi + shift, functionals(moved, xi + shift), k);
  };
  auto even = [&](double h) {
    const Matrix2 a = at(h), b = at(-h);
    Matrix2 g;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) g[i][j] = 0.5 * (a[i][j] + b[i][j]);
    return g;
  };
  const double h = kLimitStep;
  const Matrix2 g1 = even(h), g2 = even(2.0 * h), g4 = even(4.0 * h);
  Matrix2 s;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const double r1 = (4.0 * g1[i][j] - g2[i][j]) / 3.0;
      const double r2 = (4.0 * g2[i][j] - g4[i][j]) / 3.0;
      s[i][j] = (16.0 * r1 - r2) / 15.0;
    }
  }
  return s;
}

Interval ci_xi(const FitResult& fit, const MomentFunctionals& f, double level) {
  if (!is_extended(fit.method))
    fail(ErrorKind::invalid_argument, "confidence intervals are available for extended-model fits only");
  require(level >= 0.0 && level < 1.0, "level must lie in [0, 1)");
  if (!fit.converged) fail(ErrorKind::infeasible, "fit did not converge");
  const double var = track_of(fit.method) == Track::pareto ? var_xi_eplus(fit.xi, f, fit.k)
                                                           : cov_xi_tau_e(fit.xi, f, fit.k)[0][0];
  const double z = level == 0.0 ? 0.0 : normal_quantile(0.5 * (1.0 + level));
  const double half = z * std::sqrt(var);
  return {fit.xi - half, fit.xi + half};
}

Interval ci_xi(const FitResult& fit, double level) {
  if (!is_extended(fit.method))
    fail(ErrorKind::invalid_argument, "confidence intervals are available for extended-model fits only");
  require(fit.bias != nullptr, "fit carries no bias function");
  require(level >= 0.0 && level < 1.0, "level must lie in [0, 1)");
  if (!fit.converged) fail(ErrorKind::infeasible, "fit did not converge");
  double var;
  if (track_of(fit.method) == Track::pareto) {
    var = var_xi_eplus(fit.xi, functionals(*fit.bias, fit.xi), fit.k);
  } else {
    var = cov_xi_tau_e(fit.xi, *fit.bias, fit.k)[0][0];
  }
  const double z = level == 0.0 ? 0.0 : normal_quantile(0.5 * (1.0 + level));
  const double half = z * std::sqrt(var);
  return {fit.xi - half, fit.xi + half};
}

TailEstimate tail_prob(const FitResult& fit, double c, std::size_t n) {
  require(n >= 1 && fit.k <= n, "k must not exceed n");
  require(std::isfinite(c), "c must be finite");
  if (c < fit.threshold) fail(ErrorKind::invalid_argument, "c lies below the threshold");
  const double h = survival_scale(fit, c);
  double s = h;
  if (is_transformed(fit.method)) {
    require(fit.g_hat != nullptr, "transformed fit carries no transformation estimate");
    s = fit.g_hat->cdf(std::clamp(h, 0.0, 1.0));
  } else if (is_extended(fit.method) && fit.bias && fit.delta && *fit.delta != 0.0 && h > 0.0) {
    s = h * (1.0 + *fit.delta * fit.bias->B(h));
  }
  const double ratio = static_cast<double>(fit.k) / static_cast<double>(n);
  return {fit.method, fit.k, std::clamp(ratio * s, 0.0, 1.0), fit.threshold};
}

TailEstimate tail_quantile(const FitResult& fit, double p, std::size_t n) {
  require(n >= 1 && fit.k <= n, "k must not exceed n");
  const double ratio = static_cast<double>(fit.k) / static_cast<double>(n);
  require(p > 0.0, "p must be positive");
  if (!(p < ratio))
    fail(ErrorKind::invalid_argument, "p is not below k/n; use the empirical quantile instead");

  const double t = fit.threshold;
  auto prob = [&](double c) { return tail_prob(fit, c, n).value; };
  double lo = t;
  double hi;
  const bool pareto = track_of(fit.method) == Track::pareto;
  if (!pareto && fit.xi < 0.0) {
    hi = t + *fit.sigma / -fit.xi;
  } else {
    double step = pareto ? t : std::max(*fit.sigma, 1e-300);
    hi = t + step;
    for (int i = 0; i < 2000 && prob(hi) > p; ++i) {
      lo = hi;
      step *= 2.0;
      hi = t + step;
      if (!std::isfinite(hi)) fail(ErrorKind::infeasible, "no finite level reaches the requested probability");
    }
  }
  for (int i = 0; i < 400; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double v = prob(mid);
    if (std::abs(v - p) < 1e-12 * p) {
      lo = hi = mid;
      break;
    }
    if (v > p) lo = mid; else hi = mid;
  }
  return {fit.method, fit.k, 0.5 * (lo + hi), t};
}

double pearson_correlation(std::span<const std::pair<double, double>> pts) {
  const double n = static_cast<double>(pts.size());
  require(pts.size() >= 2, "correlation needs at least two points");
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : pts) {
    mx += x;
    my += y;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (const auto& [x, y] : pts) {
    sxx += (x - mx) * (x - mx);
    syy += (y - my) * (y - my);
    sxy += (x - mx) * (y - my);
  }
  if (!(sxx > 0.0 && syy > 0.0)) fail(ErrorKind::degenerate, "correlation of a constant series");
  return sxy / std::sqrt(sxx * syy);
}

GofResult gof_pp(const Sample& sample, double xi0, double sigma0, std::size_t m) {
  require(std::isfinite(xi0), "xi0 must be finite");
  require(std::isfinite(sigma0) && sigma0 > 0.0, "sigma0 must be positive");
  require(m >= 1, "Bernstein degree must be positive");
  require(sample.size() >= 2, "goodness of fit needs at least two observations");
  require(sample.min() >= 0.0, "goodness of fit needs nonnegative data");
  if (xi0 < 0.0 && sample.max() * -xi0 >= sigma0)
    fail(ErrorKind::invalid_argument, "data exceed the endpoint of the starting GPD");

  const GpdParams theta{xi0, sigma0};
  const std::size_t n = sample.size();
  std::vector<double> z(n);
  for (std::size_t j = 0; j < n; ++j) z[j] = gpd_tail(theta, sample.order_stat(n - j));
  const BernsteinCdf g = fit_bernstein(z, m);

  GofResult out;
  out.points.reserve(n);
  for (std::size_t j = 1; j <= n; ++j) {
    const double x = std::log(static_cast<double>(n + 1) / static_cast<double>(j));
    const double gv = std::max(g.cdf(z[j - 1]), std::numeric_limits<double>::min());
    out.points.emplace_back(x, -std::log(gv));
  }
  out.correlation = pearson_correlation(out.points);
  return out;
}

}  // namespace tailforge
