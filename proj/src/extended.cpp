#include "tailforge/extended.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>

#include "tailforge/error.hpp"
#include "tailforge/gpd.hpp"
#include "tailforge/optimize.hpp"

namespace tailforge {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kMinLogU = -700.0;

std::atomic<std::uint64_t> g_clamp_events{0};

bool delta_valid(double delta, const BiasFunction& bias) {
  return delta >= bias.delta_min() && delta <= bias.delta_max();
}

// Sum of log(1 + delta b_j); -infinity when the perturbed density is not positive.
double perturbation_term(std::span<const double> b, double delta) {
  double sum = 0.0;
  for (double v : b) {
    const double w = delta * v;
    if (!(1.0 + w > 0.0)) return kNegInf;
    sum += std::log1p(w);
  }
  return sum;
}

// Log of the limiting survival, floored so that bias shapes stay finite.
double clamp_log_u(double lu) { return std::max(lu, kMinLogU); }

// Pareto-track likelihood in xi with delta profiled out (or held fixed).
class ParetoTrack {
 public:
  ParetoTrack(std::span<const double> log_y, const BiasFunction& bias, std::optional<double> fixed)
      : log_y_(log_y), bias_(bias), fixed_(fixed), b_(log_y.size()) {
    sum_log_ = std::accumulate(log_y.begin(), log_y.end(), 0.0);
  }

  double profile(double xi, double* delta_out = nullptr) const {
    if (!(xi > 0.0) || !(xi < kXiMax)) return kNegInf;
    const double k = static_cast<double>(log_y_.size());
    const double base = -k * std::log(xi) - (1.0 + 1.0 / xi) * sum_log_;
    for (std::size_t j = 0; j < log_y_.size(); ++j) b_[j] = bias_.b_log(clamp_log_u(-log_y_[j] / xi));
    const auto [delta, phi] = maximize_delta();
    if (delta_out) *delta_out = delta;
    return base + phi;
  }

  // Derivative of the profile; by the envelope theorem this is the partial
  // derivative of the joint likelihood at the profiled delta.
  double derivative(double xi) const {
    double delta = 0.0;
    if (!std::isfinite(profile(xi, &delta))) return std::numeric_limits<double>::quiet_NaN();
    const double xi2 = xi * xi;
    double g = 0.0;
    for (std::size_t j = 0; j < log_y_.size(); ++j) {
      const double ly = log_y_[j];
      const double lu = clamp_log_u(-ly / xi);
      const double slope = delta * bias_.b_prime_log(lu) * std::exp(lu) / (1.0 + delta * b_[j]);
      g += -1.0 / xi + ly / xi2 + slope * ly / xi2;
    }
    return g;
  }

 private:
  std::array<double, 2> maximize_delta() const {
    if (fixed_) return {*fixed_, perturbation_term(b_, *fixed_)};
    return profile_delta(b_, bias_.delta_min(), bias_.delta_max());
  }

  std::span<const double> log_y_;
  const BiasFunction& bias_;
  std::optional<double> fixed_;
  double sum_log_ = 0.0;
  mutable std::vector<double> b_;
};

// GPD-track likelihood on unit-mean data in (xi, log sigma), delta profiled out.
class GpdTrack {
 public:
  GpdTrack(std::span<const double> y, const BiasFunction& bias, std::optional<double> fixed)
      : y_(y), bias_(bias), fixed_(fixed), b_(y.size()) {}

  double profile(double xi, double log_sigma, double* delta_out = nullptr) const {
    if (!detail::theta_in_box(xi, log_sigma)) return kNegInf;
    const double sigma = std::exp(log_sigma);
    double base = 0.0;
    for (std::size_t j = 0; j < y_.size(); ++j) {
      const double x = y_[j] / sigma;
      const double z = xi * x;
      if (!(1.0 + z > 0.0)) return kNegInf;
      const double t = log1p_ratio(xi, x);
      base += -log_sigma - t - std::log1p(z);
      b_[j] = bias_.b_log(clamp_log_u(-t));
    }
    const auto [delta, phi] = maximize_delta();
    if (delta_out) *delta_out = delta;
    return base + phi;
  }

  std::vector<double> gradient(double xi, double log_sigma) const {
    double delta = 0.0;
    if (!std::isfinite(profile(xi, log_sigma, &delta))) return {};
    const auto g = extended_gpd_gradient(xi, std::exp(log_sigma), delta, bias_, y_);
    return {g[0], g[1]};
  }

 private:
  std::array<double, 2> maximize_delta() const {
    if (fixed_) return {*fixed_, perturbation_term(b_, *fixed_)};
    return profile_delta(b_, bias_.delta_min(), bias_.delta_max());
  }

  std::span<const double> y_;
  const BiasFunction& bias_;
  std::optional<double> fixed_;
  mutable std::vector<double> b_;
};

}  // namespace

std::uint64_t survival_clamp_count() { return g_clamp_events.load(); }

std::array<double, 2> profile_delta(std::span<const double> b, double lo, double hi) {
  constexpr double floor = BiasFunction::kValidityFloor;
  double sb = 0.0, sb2 = 0.0;
  for (double v : b) {
    sb += v;
    sb2 += v * v;
    if (v > 0.0) lo = std::max(lo, (floor - 1.0) / v);
    if (v < 0.0) hi = std::min(hi, (1.0 - floor) / -v);
  }
  if (sb2 == 0.0 || !(lo <= hi)) return {0.0, 0.0};

  auto derivs = [&](double d, double& g, double& h) {
    g = 0.0;
    h = 0.0;
    for (double v : b) {
      const double r = v / (1.0 + d * v);
      g += r;
      h -= r * r;
    }
  };
  double g, h;
  double a = lo, c = hi;
  derivs(lo, g, h);
  if (g <= 0.0) return {lo, perturbation_term(b, lo)};
  derivs(hi, g, h);
  if (g >= 0.0) return {hi, perturbation_term(b, hi)};

  // Concave in delta: safeguarded Newton on the score.
  double d = std::clamp(sb / sb2, lo, hi);
  for (int it = 0; it < 200; ++it) {
    derivs(d, g, h);
    if (g > 0.0) a = d; else c = d;
    if (g == 0.0) break;
    double dn = d - g / h;
    if (!(dn > a && dn < c)) dn = 0.5 * (a + c);
    if (std::abs(dn - d) <= 1e-15 * (1.0 + std::abs(d))) {
      d = dn;
      break;
    }
    d = dn;
  }
  return {d, perturbation_term(b, d)};
}

double delta_closed_form(const BiasFunction& bias, std::span<const double> u) {
  double sb = 0.0, sb2 = 0.0;
  for (double v : u) {
    const double bv = bias.b(v);
    sb += bv;
    sb2 += bv * bv;
  }
  return sb2 > 0.0 ? sb / sb2 : 0.0;
}

double extended_pareto_loglik(double xi, double delta, const BiasFunction& bias, std::span<const double> y) {
  const double base = pareto_loglik(xi, y);
  if (!std::isfinite(base)) return kNegInf;
  double sum = 0.0;
  for (double v : y) {
    const double w = delta * bias.b_log(clamp_log_u(-std::log(v) / xi));
    if (!(1.0 + w > 0.0)) return kNegInf;
    sum += std::log1p(w);
  }
  return base + sum;
}

std::array<double, 2> extended_pareto_gradient(double xi, double delta, const BiasFunction& bias,
                                               std::span<const double> y) {
  std::array<double, 2> g{0.0, 0.0};
  const double xi2 = xi * xi;
  for (double v : y) {
    const double ly = std::log(v);
    const double lu = clamp_log_u(-ly / xi);
    const double bv = bias.b_log(lu);
    const double den = 1.0 + delta * bv;
    g[0] += -1.0 / xi + ly / xi2 + delta * bias.b_prime_log(lu) * std::exp(lu) * ly / xi2 / den;
    g[1] += bv / den;
  }
  return g;
}

double extended_gpd_loglik(double xi, double sigma, double delta, const BiasFunction& bias,
                           std::span<const double> y) {
  if (!(sigma > 0.0)) return kNegInf;
  const double ls = std::log(sigma);
  double sum = 0.0;
  for (double v : y) {
    const double x = v / sigma;
    const double z = xi * x;
    if (!(1.0 + z > 0.0)) return kNegInf;
    const double t = log1p_ratio(xi, x);
    const double w = delta * bias.b_log(clamp_log_u(-t));
    if (!(1.0 + w > 0.0)) return kNegInf;
    sum += -ls - t - std::log1p(z) + std::log1p(w);
  }
  return sum;
}

std::array<double, 3> extended_gpd_gradient(double xi, double sigma, double delta, const BiasFunction& bias,
                                            std::span<const double> y) {
  std::array<double, 3> g{0.0, 0.0, 0.0};
  for (double v : y) {
    const double x = v / sigma;
    const double w = 1.0 + xi * x;
    const double t = log1p_ratio(xi, x);
    const double dt_dxi = log1p_ratio_dxi(xi, x);
    const double lu = clamp_log_u(-t);
    const double bv = bias.b_log(lu);
    const double den = 1.0 + delta * bv;
    const double slope = delta * bias.b_prime_log(lu) * std::exp(lu) / den;  // d log(1+delta b)/d log u
    g[0] += -dt_dxi - x / w - slope * dt_dxi;
    g[1] += -1.0 + (1.0 + xi) * x / w + slope * x / w;
    g[2] += bv / den;
  }
  return g;
}

ExtendedFit fit_extended_pareto(const ExceedanceSet& ex, const BiasFunction& bias, const ExtendedOptions& opts) {
  require(ex.mode == ExceedanceMode::ratio, "extended Pareto fit needs ratio-mode exceedances");
  const auto& y = ex.values;
  if (y.size() < 5) fail(ErrorKind::infeasible, "extended fit needs k >= 5 exceedances");
  std::vector<double> log_y(y.size());
  for (std::size_t j = 0; j < y.size(); ++j) {
    require(y[j] >= 1.0, "ratio exceedances must be >= 1");
    log_y[j] = std::log(y[j]);
  }
  const double h = std::accumulate(log_y.begin(), log_y.end(), 0.0) / static_cast<double>(y.size());
  if (!(h > 0.0)) fail(ErrorKind::degenerate, "all exceedances equal the threshold");
  if (opts.fixed_delta) require(delta_valid(*opts.fixed_delta, bias), "fixed delta outside the validity region");

  const ParetoTrack problem(log_y, bias, opts.fixed_delta);

  // Log-grid scan around the Hill value, Brent on the best cell, then
  // Newton on the profile derivative.
  constexpr int kGrid = 16;
  std::vector<double> grid;
  for (int i = 0; i <= kGrid; ++i) {
    const double xi = h * std::exp(-2.5 + 5.0 * i / kGrid);
    if (xi > 1e-3 && xi < kXiMax) grid.push_back(xi);
  }
  std::size_t best = 0;
  double best_f = kNegInf;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double f = problem.profile(grid[i]);
    if (f > best_f) {
      best_f = f;
      best = i;
    }
  }
  if (!std::isfinite(best_f)) fail(ErrorKind::infeasible, "extended Pareto likelihood has no feasible point");
  // Each half cell separately: the profile can have two modes within one
  // bracket of the coarse grid.
  double xi = grid[best];
  double xi_f = best_f;
  int brent_evals = 0;
  for (const std::size_t other : {best > 0 ? best - 1 : best, std::min(best + 1, grid.size() - 1)}) {
    if (other == best) continue;
    const auto br = brent_maximize([&](double x) { return problem.profile(x); }, std::min(grid[best], grid[other]),
                                   std::max(grid[best], grid[other]));
    brent_evals += br.evaluations;
    if (br.value > xi_f) {
      xi = br.x[0];
      xi_f = br.value;
    }
  }

  NewtonOptions nopts;
  nopts.gradient_tol = 1e-10 * static_cast<double>(y.size());
  const Objective f = [&](std::span<const double> x) { return problem.profile(x[0]); };
  const Gradient grad = [&](std::span<const double> x) { return std::vector<double>{problem.derivative(x[0])}; };
  const auto r = newton_polish(f, grad, {xi}, nopts);
  xi = r.x[0];
  double delta = 0.0;
  const double value = problem.profile(xi, &delta);

  ExtendedFit fit;
  fit.method = Method::ep_plus;
  fit.k = ex.k;
  fit.threshold = ex.threshold;
  fit.xi = xi;
  fit.delta = delta;
  fit.loglik = value;
  fit.converged = r.converged;
  fit.iterations = brent_evals + r.evaluations + static_cast<int>(grid.size());
  fit.bias = std::make_shared<const BiasFunction>(bias);
  if (!fit.converged) fit.message = "optimizer did not reach the gradient tolerance";
  return fit;
}

ExtendedFit fit_extended_gpd(const ExceedanceSet& ex, const BiasFunction& bias, const ExtendedOptions& opts) {
  const auto& y = ex.values;
  if (y.size() < 5) fail(ErrorKind::infeasible, "extended fit needs k >= 5 exceedances");
  if (opts.fixed_delta) require(delta_valid(*opts.fixed_delta, bias), "fixed delta outside the validity region");

  const FitResult ml = opts.start ? *opts.start : fit_gpd_ml(ex);
  const double scale = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  std::vector<double> yn(y.size());
  std::transform(y.begin(), y.end(), yn.begin(), [&](double v) { return v / scale; });

  const GpdTrack problem(yn, bias, opts.fixed_delta);
  const Objective f = [&](std::span<const double> x) { return problem.profile(x[0], x[1]); };
  const Gradient grad = [&](std::span<const double> x) { return problem.gradient(x[0], x[1]); };

  const double ls_ml = std::log(*ml.sigma / scale);
  std::vector<double> start{std::clamp(ml.xi, kXiMin + 0.01, kXiMax - 0.01), ls_ml};
  if (!std::isfinite(f(start))) start = {ml.xi, ls_ml};
  if (!std::isfinite(f(start))) fail(ErrorKind::infeasible, "extended GPD likelihood has no feasible start");

  // The xi profile can be bimodal when delta is weakly identified: scan xi at
  // the classical scale and add the best distant scan point as a second start.
  std::vector<std::vector<double>> starts{start};
  {
    const double y_max = *std::max_element(yn.begin(), yn.end());
    double best_f = kNegInf;
    std::vector<double> best_x;
    for (int i = -4; i <= 8; ++i) {
      const double xi = start[0] + 0.075 * i;
      if (i == 0 || xi <= kXiMin || xi >= kXiMax) continue;
      const double ls = xi < 0.0 ? std::max(ls_ml, std::log(-xi * y_max * 1.01)) : ls_ml;
      const double v = f(std::vector<double>{xi, ls});
      if (v > best_f) {
        best_f = v;
        best_x = {xi, ls};
      }
    }
    if (!best_x.empty() && std::abs(best_x[0] - start[0]) > 0.1) starts.push_back(best_x);
  }

  // A coarse simplex locates the basin, Newton on the profile finishes.
  SimplexOptions sopts;
  sopts.ftol = 1e-7;
  sopts.xtol = 1e-3;
  sopts.max_evaluations = 400;
  sopts.restarts = 0;
  const std::array<double, 2> steps{0.1, 0.1};
  OptimResult coarse;
  coarse.value = kNegInf;
  int evals = 0;
  for (const auto& s0 : starts) {
    auto c = simplex_maximize(f, s0, steps, sopts);
    evals += c.evaluations;
    if (c.value > coarse.value) coarse = std::move(c);
  }

  NewtonOptions nopts;
  nopts.gradient_tol = 1e-8 * static_cast<double>(y.size());
  const auto r = newton_polish(f, grad, coarse.x, nopts);
  detail::ThetaOptimum opt{r.x[0], r.x[1], r.value, r.converged, false, evals + r.evaluations};
  const detail::ThetaProblem edge_problem{
      [&](double xi, double ls) { return problem.profile(xi, ls); },
      [&](double xi, double ls) -> std::array<double, 2> {
        const auto g = problem.gradient(xi, ls);
        if (g.empty()) return {kNaN, kNaN};
        return {g[0], g[1]};
      }};
  detail::settle_on_edge(edge_problem, opt, nopts.gradient_tol);
  double delta = 0.0;
  const double value = problem.profile(opt.xi, opt.log_sigma, &delta);

  ExtendedFit fit;
  fit.method = Method::ep;
  fit.k = ex.k;
  fit.threshold = ex.threshold;
  fit.xi = opt.xi;
  fit.sigma = std::exp(opt.log_sigma) * scale;
  fit.tau = fit.xi / *fit.sigma;
  fit.delta = delta;
  fit.loglik = value - static_cast<double>(y.size()) * std::log(scale);
  fit.converged = opt.converged;
  fit.iterations = opt.evaluations;
  fit.bias = std::make_shared<const BiasFunction>(bias);
  if (!fit.converged) fit.message = "optimizer did not reach the gradient tolerance";
  if (opt.at_bound) fit.message = "xi held at the edge of the inference box";
  return fit;
}

double extended_survival(const ExtendedFit& fit, double y) {
  double hbar;
  if (fit.sigma) {
    require(y >= 0.0, "exceedance must be nonnegative");
    hbar = gpd_tail({fit.xi, *fit.sigma}, y);
  } else {
    require(y >= 1.0, "ratio exceedance must be >= 1");
    hbar = std::pow(y, -1.0 / fit.xi);
  }
  if (hbar <= 0.0) return 0.0;
  const double delta = fit.delta.value_or(0.0);
  const double s = delta == 0.0 || !fit.bias ? hbar : hbar * (1.0 + delta * fit.bias->B(hbar));
  if (s < 0.0 || s > 1.0) {
    g_clamp_events.fetch_add(1, std::memory_order_relaxed);
    return std::clamp(s, 0.0, 1.0);
  }
  return s;
}

}  // namespace tailforge
