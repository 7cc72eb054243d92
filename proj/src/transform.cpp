#include "tailforge/transform.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tailforge/error.hpp"
#include "tailforge/gpd.hpp"
#include "tailforge/optimize.hpp"

namespace tailforge {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_density(const BernsteinCdf& g, double u) { return std::log(std::max(g.pdf(u), kDensityFloor)); }

// d/du log max(g(u), floor); zero where the floor is active.
double log_density_slope(const BernsteinCdf& g, double u) {
  const double d = g.pdf(u);
  return d > kDensityFloor ? g.pdf_derivative(u) / d : 0.0;
}

std::vector<double> transformed(std::span<const double> y, double xi, std::optional<double> sigma) {
  std::vector<double> z(y.size());
  for (std::size_t j = 0; j < y.size(); ++j)
    z[j] = sigma ? gpd_tail({xi, *sigma}, y[j]) : std::pow(y[j], -1.0 / xi);
  return z;
}

struct Iterate {
  double xi = 0.0;
  double log_sigma = 0.0;
  double value = kNegInf;
  bool converged = false;
};

// Maximizes the GPD-track objective on unit-mean data from (xi, log sigma).
Iterate update_gpd(std::span<const double> yn, const BernsteinCdf& g, double xi, double ls) {
  detail::ThetaProblem problem{
      [&](double a, double b) { return transform_loglik(yn, a, std::exp(b), g); },
      [&](double a, double b) { return transform_loglik_gradient(yn, a, std::exp(b), g); }};
  const std::array<std::array<double, 2>, 1> starts{{{xi, ls}}};
  const auto opt = detail::maximize_theta(problem, starts, 1e-8 * static_cast<double>(yn.size()));
  return {opt.xi, opt.log_sigma, opt.value, opt.converged};
}

Iterate update_pareto(std::span<const double> y, const BernsteinCdf& g, double xi0) {
  const auto f1 = [&](double xi) { return xi < kXiMax ? transform_pareto_loglik(y, xi, g) : kNegInf; };
  constexpr int kGrid = 12;
  double best_xi = xi0, best_f = f1(xi0);
  std::vector<double> grid;
  for (int i = 0; i <= kGrid; ++i) grid.push_back(xi0 * std::exp(-1.5 + 3.0 * i / kGrid));
  std::size_t bi = kGrid / 2;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double v = f1(grid[i]);
    if (v > best_f) {
      best_f = v;
      best_xi = grid[i];
      bi = i;
    }
  }
  const auto br = brent_maximize(f1, grid[bi > 0 ? bi - 1 : 0], grid[std::min<std::size_t>(bi + 1, kGrid)]);
  if (br.value > best_f) {
    best_xi = br.x[0];
    best_f = br.value;
  }
  const Objective f = [&](std::span<const double> x) { return f1(x[0]); };
  const Gradient grad = [&](std::span<const double> x) {
    return std::vector<double>{transform_pareto_derivative(y, x[0], g)};
  };
  NewtonOptions nopts;
  nopts.gradient_tol = 1e-10 * static_cast<double>(y.size());
  const auto r = newton_polish(f, grad, {best_xi}, nopts);
  return {r.x[0], 0.0, r.value, r.converged};
}

}  // namespace

double transform_loglik(std::span<const double> y, double xi, double sigma, const BernsteinCdf& g) {
  if (!(sigma > 0.0)) return kNegInf;
  const double ls = std::log(sigma);
  double sum = 0.0;
  for (double v : y) {
    const double x = v / sigma;
    const double z = xi * x;
    if (!(1.0 + z > 0.0)) return kNegInf;
    const double t = log1p_ratio(xi, x);
    sum += log_density(g, std::exp(-t)) - ls - t - std::log1p(z);
  }
  return sum;
}

std::array<double, 2> transform_loglik_gradient(std::span<const double> y, double xi, double sigma,
                                                const BernsteinCdf& g) {
  std::array<double, 2> grad{0.0, 0.0};
  for (double v : y) {
    const double x = v / sigma;
    const double w = 1.0 + xi * x;
    const double t = log1p_ratio(xi, x);
    const double dt_dxi = log1p_ratio_dxi(xi, x);
    const double u = std::exp(-t);
    const double slope = log_density_slope(g, u) * u;  // d log g / d log u
    grad[0] += -dt_dxi - x / w - slope * dt_dxi;
    grad[1] += -1.0 + (1.0 + xi) * x / w + slope * x / w;
  }
  return grad;
}

double transform_pareto_loglik(std::span<const double> y, double xi, const BernsteinCdf& g) {
  const double base = pareto_loglik(xi, y);
  if (!std::isfinite(base)) return kNegInf;
  double sum = base;
  for (double v : y) sum += log_density(g, std::pow(v, -1.0 / xi));
  return sum;
}

double transform_pareto_derivative(std::span<const double> y, double xi, const BernsteinCdf& g) {
  const double xi2 = xi * xi;
  double d = 0.0;
  for (double v : y) {
    const double ly = std::log(v);
    const double u = std::exp(-ly / xi);
    d += -1.0 / xi + ly / xi2 + log_density_slope(g, u) * u * ly / xi2;
  }
  return d;
}

TransformFit fit_transform(const ExceedanceSet& ex, std::size_t m, Track track, const TransformOptions& opts) {
  require(m >= 1, "Bernstein degree must be positive");
  require(opts.max_iter >= 0, "max_iter must be nonnegative");
  require(opts.tol > 0.0, "tol must be positive");
  const auto& y = ex.values;
  if (y.size() < 5) fail(ErrorKind::infeasible, "transformed fit needs k >= 5 exceedances");
  const bool gpd = track == Track::gpd;
  if (!gpd) require(ex.mode == ExceedanceMode::ratio, "Pareto track needs ratio-mode exceedances");

  const FitResult ml = gpd ? fit_gpd_ml(ex) : fit_pareto_ml(ex);
  if (!gpd && !(ml.xi > 0.0)) fail(ErrorKind::degenerate, "Pareto start has nonpositive xi");

  const double scale = gpd ? std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size()) : 1.0;
  std::vector<double> yn(y.size());
  std::transform(y.begin(), y.end(), yn.begin(), [&](double v) { return v / scale; });

  auto objective = [&](const Iterate& it, const BernsteinCdf& g) {
    return gpd ? transform_loglik(yn, it.xi, std::exp(it.log_sigma), g) : transform_pareto_loglik(yn, it.xi, g);
  };
  auto fit_g = [&](const Iterate& it) {
    return fit_bernstein(transformed(yn, it.xi, gpd ? std::optional<double>(std::exp(it.log_sigma)) : std::nullopt), m);
  };

  // Iteration 0: classical start and one Bernstein fit.
  Iterate cur{ml.xi, gpd ? std::log(*ml.sigma / scale) : 0.0, 0.0, ml.converged};
  BernsteinCdf g = fit_g(cur);
  BernsteinCdf g_used = g;
  cur.value = objective(cur, g);

  const Iterate start = cur;
  Iterate best = cur;
  BernsteinCdf g_best = g;
  bool converged = std::isinf(opts.tol);
  int decreases = 0;
  int iterations = 0;
  bool oscillation = false;
  double prev = cur.value;
  while (!converged && iterations < opts.max_iter) {
    // An identity G leaves the classical likelihood, whose maximizer is the start.
    Iterate next = g.is_identity() ? start
                   : gpd           ? update_gpd(yn, g, cur.xi, cur.log_sigma)
                                   : update_pareto(yn, g, cur.xi);
    ++iterations;
    g_used = g;
    if (next.value < best.value - 1e-9) {
      if (++decreases >= 2) {
        oscillation = true;
        break;
      }
    } else {
      best = next;
      g_best = g_used;
    }
    if (std::abs(next.value - prev) < opts.tol * std::max(1.0, std::abs(prev))) converged = true;
    prev = next.value;
    cur = next;
    g = fit_g(cur);
  }

  TransformFit out;
  out.xi = best.xi;
  if (gpd) {
    out.sigma = std::exp(best.log_sigma) * scale;
    out.tau = out.xi / *out.sigma;
  }
  out.g = g_best;
  out.m = m;
  out.iterations = iterations;
  out.converged = converged && !oscillation && best.converged;
  out.oscillation = oscillation;
  out.loglik = best.value - static_cast<double>(y.size()) * std::log(scale);
  if (oscillation)
    out.message = "likelihood decreased twice; returning the best iterate";
  else if (!converged)
    out.message = "iteration limit reached";
  else if (!best.converged)
    out.message = "parameter update did not reach the gradient tolerance";
  return out;
}

}  // namespace tailforge
