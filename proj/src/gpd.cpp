#include "tailforge/gpd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tailforge/error.hpp"
#include "tailforge/optimize.hpp"

namespace tailforge {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

GpdParams GpdParams::from_xi_tau(double xi, double tau) {
  if (xi == 0.0) fail(ErrorKind::invalid_argument, "xi = 0 needs sigma, not tau");
  require(tau != 0.0 && xi / tau > 0.0, "tau must share the sign of xi");
  return {xi, xi / tau};
}

double log1p_ratio(double xi, double x) {
  if (std::abs(xi) < kXiEps) return x - xi * x * x / 2.0 + xi * xi * x * x * x / 3.0;
  return std::log1p(xi * x) / xi;
}

double log1p_ratio_dxi(double xi, double x) {
  const double z = xi * x;
  if (std::abs(z) < 0.05) {
    // x^2 * sum_{n>=1} (-1)^n n/(n+1) z^(n-1)
    double sum = 0.0;
    double zp = 1.0;
    for (int n = 1; n < 60; ++n) {
      const double term = (n % 2 ? -1.0 : 1.0) * n / (n + 1.0) * zp;
      sum += term;
      if (std::abs(zp) < 1e-18) break;
      zp *= z;
    }
    return x * x * sum;
  }
  return (x / (1.0 + z) - std::log1p(z) / xi) / xi;
}

double gpd_tail(const GpdParams& p, double y) {
  if (y <= 0.0) return 1.0;
  const double x = y / p.sigma;
  if (1.0 + p.xi * x <= 0.0) return 0.0;
  return std::exp(-log1p_ratio(p.xi, x));
}

double gpd_survival(const GpdParams& p, double y) {
  require(p.sigma > 0.0, "sigma must be positive");
  require(y >= 0.0, "exceedance must be nonnegative");
  if (p.xi < 0.0 && y > p.sigma / -p.xi) fail(ErrorKind::invalid_argument, "exceedance beyond the GPD endpoint");
  return gpd_tail(p, y);
}

double gpd_loglik(const GpdParams& p, std::span<const double> y) {
  if (!(p.sigma > 0.0) || !std::isfinite(p.xi)) return kNegInf;
  const double log_sigma = std::log(p.sigma);
  double sum = 0.0;
  for (double v : y) {
    const double x = v / p.sigma;
    const double z = p.xi * x;
    if (!(1.0 + z > 0.0)) return kNegInf;
    sum += -log_sigma - log1p_ratio(p.xi, x) - std::log1p(z);
  }
  return sum;
}

std::array<double, 2> gpd_loglik_gradient(const GpdParams& p, std::span<const double> y) {
  std::array<double, 2> g{0.0, 0.0};
  for (double v : y) {
    const double x = v / p.sigma;
    const double w = 1.0 + p.xi * x;
    g[0] += -log1p_ratio_dxi(p.xi, x) - x / w;
    g[1] += -1.0 + (1.0 + p.xi) * x / w;
  }
  return g;
}

double pareto_loglik(double xi, std::span<const double> y) {
  if (!(xi > 0.0)) return kNegInf;
  const double lx = std::log(xi);
  double sum = 0.0;
  for (double v : y) {
    if (!(v >= 1.0)) return kNegInf;
    sum += -lx - (1.0 + 1.0 / xi) * std::log(v);
  }
  return sum;
}

namespace detail {

bool theta_in_box(double xi, double log_sigma) {
  return xi >= kXiMin && xi < kXiMax && log_sigma > std::log(1e-8) && log_sigma < std::log(1e8);
}

ThetaOptimum maximize_theta(const ThetaProblem& problem, std::span<const std::array<double, 2>> starts,
                            double gradient_tol) {
  const Objective f = [&](std::span<const double> x) {
    if (!theta_in_box(x[0], x[1])) return kNegInf;
    return problem.value(x[0], x[1]);
  };
  const Gradient grad = [&](std::span<const double> x) {
    const auto g = problem.gradient(x[0], x[1]);
    return std::vector<double>{g[0], g[1]};
  };
  SimplexOptions sopts;
  sopts.ftol = 1e-11;
  sopts.xtol = 1e-7;
  sopts.max_evaluations = 1500;
  const std::array<double, 2> steps{0.05, 0.1};

  ThetaOptimum out;
  std::vector<double> best;
  double best_f = kNegInf;
  for (const auto& s : starts) {
    if (!std::isfinite(f(std::vector<double>{s[0], s[1]}))) continue;
    auto r = simplex_maximize(f, {s[0], s[1]}, steps, sopts);
    out.evaluations += r.evaluations;
    if (r.value > best_f) {
      best_f = r.value;
      best = r.x;
    }
  }
  if (best.empty()) fail(ErrorKind::infeasible, "no feasible starting point");
  NewtonOptions nopts;
  nopts.gradient_tol = gradient_tol;
  auto polished = newton_polish(f, grad, best, nopts);
  out.evaluations += polished.evaluations;
  out.xi = polished.x[0];
  out.log_sigma = polished.x[1];
  out.value = polished.value;
  out.converged = polished.converged;
  settle_on_edge(problem, out, gradient_tol);
  return out;
}

void settle_on_edge(const ThetaProblem& problem, ThetaOptimum& opt, double gradient_tol) {
  constexpr double kNear = 0.01;
  if (opt.converged) return;
  double edge = 0.0, outward = 0.0;
  if (opt.xi < kXiMin + kNear) {
    edge = kXiMin;
    outward = -1.0;
  } else if (opt.xi > kXiMax - kNear) {
    edge = std::nextafter(kXiMax, 0.0);
    outward = 1.0;
  } else {
    return;
  }
  const Objective f = [&](std::span<const double> x) {
    if (!theta_in_box(edge, x[0])) return kNegInf;
    return problem.value(edge, x[0]);
  };
  const Gradient grad = [&](std::span<const double> x) { return std::vector<double>{problem.gradient(edge, x[0])[1]}; };
  const double ls0 = opt.log_sigma;
  if (!std::isfinite(f(std::vector<double>{ls0}))) return;
  const auto br = brent_maximize([&](double ls) { return f(std::vector<double>{ls}); }, ls0 - 0.5, ls0 + 0.5);
  NewtonOptions nopts;
  nopts.gradient_tol = gradient_tol;
  const auto r = newton_polish(f, grad, {br.value >= f(std::vector<double>{ls0}) ? br.x[0] : ls0}, nopts);
  opt.evaluations += br.evaluations + r.evaluations;
  if (!r.converged || r.value < opt.value - 1e-9 * std::max(1.0, std::abs(opt.value))) return;
  const auto g = problem.gradient(edge, r.x[0]);
  if (!(outward * g[0] > 0.0)) return;
  opt.xi = edge;
  opt.log_sigma = r.x[0];
  opt.value = r.value;
  opt.converged = true;
  opt.at_bound = true;
}

std::vector<std::array<double, 2>> gpd_starts(std::span<const double> y) {
  const double m = mean(y);
  double var = 0.0;
  for (double v : y) var += (v - m) * (v - m);
  var /= static_cast<double>(y.size() - 1);
  const double ratio = m * m / std::max(var, 1e-300);
  double xi_m = std::clamp(0.5 * (1.0 - ratio), -0.45, 2.0);
  const double sigma_m = std::max(1e-6, 0.5 * m * (ratio + 1.0));
  const double y_max = *std::max_element(y.begin(), y.end());
  std::vector<std::array<double, 2>> out;
  for (double xi : {xi_m, std::min(xi_m + 0.3, 4.0), std::max(xi_m - 0.3, -0.45), 0.1}) {
    double sigma = sigma_m;
    if (xi < 0.0) sigma = std::max(sigma, -xi * y_max * 1.05);
    out.push_back({xi, std::log(sigma)});
  }
  return out;
}

std::array<double, 2> gpd_profile_start(std::span<const double> y) {
  const double y_max = *std::max_element(y.begin(), y.end());
  const double k = static_cast<double>(y.size());
  // For fixed tau the likelihood is maximized by xi = mean log(1 + tau y);
  // sigma = xi / tau is then the mean of log1p_ratio(tau, y).
  auto sigma_of = [&](double tau) {
    double s = 0.0;
    for (double v : y) s += log1p_ratio(tau, v);
    return s / k;
  };
  auto profile = [&](double v) {
    const double tau = std::expm1(v) / y_max;
    const double sigma = sigma_of(tau);
    const double xi = tau * sigma;
    if (!(sigma > 0.0) || !(xi > kXiMin) || !(xi < kXiMax)) return kNegInf;
    return -k * std::log(sigma) - k * (xi + 1.0);
  };
  constexpr int kGrid = 36;
  constexpr double lo = -7.0, hi = 14.0;
  std::vector<double> grid(kGrid + 1);
  for (int i = 0; i <= kGrid; ++i) grid[i] = lo + (hi - lo) * i / kGrid;
  grid.push_back(0.0);
  std::sort(grid.begin(), grid.end());
  std::size_t best = 0;
  double best_f = kNegInf;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double f = profile(grid[i]);
    if (f > best_f) {
      best_f = f;
      best = i;
    }
  }
  if (!std::isfinite(best_f)) fail(ErrorKind::infeasible, "GPD profile likelihood has no feasible point");
  const double a = grid[best > 0 ? best - 1 : 0];
  const double b = grid[std::min(best + 1, grid.size() - 1)];
  const auto r = brent_maximize(profile, a, b);
  const double v = r.value >= best_f ? r.x[0] : grid[best];
  const double tau = std::expm1(v) / y_max;
  const double sigma = sigma_of(tau);
  return {tau * sigma, std::log(sigma)};
}

}  // namespace detail

FitResult fit_gpd_ml(const ExceedanceSet& ex) {
  const auto& y = ex.values;
  if (y.size() < 5) fail(ErrorKind::infeasible, "GPD fit needs k >= 5 exceedances");
  for (double v : y) require(std::isfinite(v) && v >= 0.0, "GPD exceedances must be finite and nonnegative");
  const auto [mn, mx] = std::minmax_element(y.begin(), y.end());
  if (!(*mx > *mn)) fail(ErrorKind::degenerate, "all exceedances are equal");

  const double scale = mean(y);
  std::vector<double> yn(y.size());
  std::transform(y.begin(), y.end(), yn.begin(), [&](double v) { return v / scale; });

  detail::ThetaProblem problem{
      [&](double xi, double ls) { return gpd_loglik({xi, std::exp(ls)}, yn); },
      [&](double xi, double ls) { return gpd_loglik_gradient({xi, std::exp(ls)}, yn); }};
  const double gtol = 1e-8 * static_cast<double>(yn.size());

  const Objective f = [&](std::span<const double> x) {
    if (!detail::theta_in_box(x[0], x[1])) return kNegInf;
    return problem.value(x[0], x[1]);
  };
  const Gradient grad = [&](std::span<const double> x) {
    const auto g = problem.gradient(x[0], x[1]);
    return std::vector<double>{g[0], g[1]};
  };

  detail::ThetaOptimum opt;
  bool have = false;
  try {
    const auto s = detail::gpd_profile_start(yn);
    NewtonOptions nopts;
    nopts.gradient_tol = gtol;
    const auto r = newton_polish(f, grad, {s[0], s[1]}, nopts);
    opt = {r.x[0], r.x[1], r.value, r.converged, false, r.evaluations};
    if (std::isfinite(r.value)) detail::settle_on_edge(problem, opt, gtol);
    have = opt.converged;
  } catch (const Error&) {
  }
  if (!have) {
    const auto starts = detail::gpd_starts(yn);
    opt = detail::maximize_theta(problem, starts, gtol);
  }

  FitResult res;
  res.method = Method::gpd_ml;
  res.k = ex.k;
  res.threshold = ex.threshold;
  res.xi = opt.xi;
  res.sigma = std::exp(opt.log_sigma) * scale;
  res.tau = res.xi / *res.sigma;
  res.delta = 0.0;
  res.loglik = opt.value - static_cast<double>(y.size()) * std::log(scale);
  res.converged = opt.converged;
  res.iterations = opt.evaluations;
  if (!res.converged) res.message = "gradient tolerance not reached";
  if (opt.at_bound) res.message = "xi held at the edge of the inference box";
  return res;
}

FitResult fit_pareto_ml(const ExceedanceSet& ex) {
  require(ex.mode == ExceedanceMode::ratio, "Pareto fit needs ratio-mode exceedances");
  const auto& y = ex.values;
  require(!y.empty(), "Pareto fit needs exceedances");
  double sum = 0.0;
  for (double v : y) {
    require(v >= 1.0, "ratio exceedances must be >= 1");
    sum += std::log(v);
  }
  FitResult res;
  res.method = Method::pareto_ml;
  res.k = ex.k;
  res.threshold = ex.threshold;
  res.xi = sum / static_cast<double>(y.size());
  res.delta = 0.0;
  res.converged = res.xi > 0.0;
  res.loglik = pareto_loglik(res.xi, y);
  if (!res.converged) res.message = "degenerate exceedances (xi = 0)";
  return res;
}

}  // namespace tailforge
