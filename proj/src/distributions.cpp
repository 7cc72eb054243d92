#include "tailforge/distributions.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "tailforge/error.hpp"
#include "tailforge/random.hpp"

namespace tailforge {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_positive(double v, const char* name) {
  require(std::isfinite(v) && v > 0.0, std::string(name) + " must be finite and > 0");
}

void require_probability(double p) {
  require(p > 0.0 && p < 1.0, "probability must lie in (0, 1)");
}

// (1+z)^(-1/xi) written as exp(-log1p(z)/xi) with the xi -> 0 limit.
double gpd_tail(double x, double xi, double sigma) {
  if (xi == 0.0) return std::exp(-x / sigma);
  const double z = xi * x / sigma;
  if (z <= -1.0) return 0.0;
  return std::exp(-std::log1p(z) / xi);
}

}  // namespace

std::string to_string(Family f) {
  switch (f) {
    case Family::burr: return "burr";
    case Family::frechet: return "frechet";
    case Family::std_normal: return "std_normal";
    case Family::exponential: return "exponential";
    case Family::reversed_burr: return "reversed_burr";
    case Family::ev_weibull: return "ev_weibull";
    case Family::pareto: return "pareto";
    case Family::gpd: return "gpd";
  }
  return "unknown";
}

Family family_from_string(const std::string& name) {
  for (Family f : {Family::burr, Family::frechet, Family::std_normal, Family::exponential,
                   Family::reversed_burr, Family::ev_weibull, Family::pareto, Family::gpd}) {
    if (to_string(f) == name) return f;
  }
  fail(ErrorKind::invalid_argument, "unknown distribution family '" + name + "'");
}

DistributionSpec DistributionSpec::burr(double tau, double lambda) {
  require_positive(tau, "tau");
  require_positive(lambda, "lambda");
  return {Family::burr, tau, lambda};
}

DistributionSpec DistributionSpec::frechet(double alpha) {
  require_positive(alpha, "alpha");
  return {Family::frechet, alpha, 0.0};
}

DistributionSpec DistributionSpec::std_normal() { return {Family::std_normal, 0.0, 0.0}; }

DistributionSpec DistributionSpec::exponential(double lambda) {
  require_positive(lambda, "lambda");
  return {Family::exponential, lambda, 0.0};
}

DistributionSpec DistributionSpec::reversed_burr(double tau, double lambda) {
  require_positive(tau, "tau");
  require_positive(lambda, "lambda");
  return {Family::reversed_burr, tau, lambda};
}

DistributionSpec DistributionSpec::ev_weibull(double alpha) {
  require_positive(alpha, "alpha");
  return {Family::ev_weibull, alpha, 0.0};
}

DistributionSpec DistributionSpec::pareto(double xi) {
  require_positive(xi, "xi");
  return {Family::pareto, xi, 0.0};
}

DistributionSpec DistributionSpec::gpd(double xi, double sigma) {
  require(std::isfinite(xi), "xi must be finite");
  require_positive(sigma, "sigma");
  return {Family::gpd, xi, sigma};
}

DistributionSpec DistributionSpec::from_params(const std::string& family,
                                               const std::map<std::string, double>& params) {
  auto get = [&](const char* key) {
    auto it = params.find(key);
    require(it != params.end(), "missing parameter '" + std::string(key) + "' for " + family);
    return it->second;
  };
  switch (family_from_string(family)) {
    case Family::burr: return burr(get("tau"), get("lambda"));
    case Family::frechet: return frechet(get("alpha"));
    case Family::std_normal: return std_normal();
    case Family::exponential: return exponential(get("lambda"));
    case Family::reversed_burr: return reversed_burr(get("tau"), get("lambda"));
    case Family::ev_weibull: return ev_weibull(get("alpha"));
    case Family::pareto: return pareto(get("xi"));
    case Family::gpd: return gpd(get("xi"), get("sigma"));
  }
  fail(ErrorKind::invalid_argument, "unknown family");
}

std::map<std::string, double> DistributionSpec::params() const {
  switch (family_) {
    case Family::burr:
    case Family::reversed_burr: return {{"tau", p1_}, {"lambda", p2_}};
    case Family::frechet:
    case Family::ev_weibull: return {{"alpha", p1_}};
    case Family::std_normal: return {};
    case Family::exponential: return {{"lambda", p1_}};
    case Family::pareto: return {{"xi", p1_}};
    case Family::gpd: return {{"xi", p1_}, {"sigma", p2_}};
  }
  return {};
}

double DistributionSpec::lower_endpoint() const {
  switch (family_) {
    case Family::std_normal:
    case Family::reversed_burr:
    case Family::ev_weibull: return -kInf;
    case Family::pareto: return 1.0;
    default: return 0.0;
  }
}

double DistributionSpec::upper_endpoint() const {
  switch (family_) {
    case Family::reversed_burr:
    case Family::ev_weibull: return 1.0;
    case Family::gpd: return p1_ < 0.0 ? p2_ / -p1_ : kInf;
    default: return kInf;
  }
}

double DistributionSpec::survival(double x) const {
  require(!std::isnan(x), "x must not be NaN");
  if (x <= lower_endpoint()) return 1.0;
  if (x >= upper_endpoint()) return 0.0;
  switch (family_) {
    case Family::burr: return std::pow(1.0 + std::pow(x, p1_), -p2_);
    case Family::frechet: return -std::expm1(-std::pow(x, -p1_));
    case Family::std_normal: return normal_survival(x);
    case Family::exponential: return std::exp(-p1_ * x);
    case Family::reversed_burr: return std::pow(1.0 + std::pow(1.0 - x, -p1_), -p2_);
    case Family::ev_weibull: return -std::expm1(-std::pow(1.0 - x, p1_));
    case Family::pareto: return std::pow(x, -1.0 / p1_);
    case Family::gpd: return gpd_tail(x, p1_, p2_);
  }
  return 0.0;
}

double DistributionSpec::cdf(double x) const {
  switch (family_) {
    case Family::frechet:
      return x <= 0.0 ? 0.0 : std::exp(-std::pow(x, -p1_));
    case Family::std_normal:
      return normal_survival(-x);
    case Family::ev_weibull:
      return x >= 1.0 ? 1.0 : std::exp(-std::pow(1.0 - x, p1_));
    default:
      return 1.0 - survival(x);
  }
}

double DistributionSpec::quantile(double p) const {
  require_probability(p);
  // -log(1-p), accurate for small p
  const double neg_log_q = -std::log1p(-p);
  switch (family_) {
    case Family::burr: return std::pow(std::expm1(neg_log_q / p2_), 1.0 / p1_);
    case Family::frechet: return std::pow(-std::log(p), -1.0 / p1_);
    case Family::std_normal: return normal_quantile(p);
    case Family::exponential: return neg_log_q / p1_;
    case Family::reversed_burr: return 1.0 - std::pow(std::expm1(neg_log_q / p2_), -1.0 / p1_);
    case Family::ev_weibull: return 1.0 - std::pow(-std::log(p), 1.0 / p1_);
    case Family::pareto: return std::exp(p1_ * neg_log_q);
    case Family::gpd:
      if (p1_ == 0.0) return p2_ * neg_log_q;
      return p2_ * std::expm1(p1_ * neg_log_q) / p1_;
  }
  return 0.0;
}

double DistributionSpec::inverse_survival(double s) const {
  require_probability(s);
  const double neg_log_s = -std::log(s);
  switch (family_) {
    case Family::burr: return std::pow(std::expm1(neg_log_s / p2_), 1.0 / p1_);
    case Family::frechet: return std::pow(-std::log1p(-s), -1.0 / p1_);
    case Family::std_normal: return -normal_quantile(s);
    case Family::exponential: return neg_log_s / p1_;
    case Family::reversed_burr: return 1.0 - std::pow(std::expm1(neg_log_s / p2_), -1.0 / p1_);
    case Family::ev_weibull: return 1.0 - std::pow(-std::log1p(-s), 1.0 / p1_);
    case Family::pareto: return std::exp(p1_ * neg_log_s);
    case Family::gpd:
      if (p1_ == 0.0) return p2_ * neg_log_s;
      return p2_ * std::expm1(p1_ * neg_log_s) / p1_;
  }
  return 0.0;
}

double DistributionSpec::true_xi() const {
  switch (family_) {
    case Family::burr: return 1.0 / (p1_ * p2_);
    case Family::frechet: return 1.0 / p1_;
    case Family::std_normal:
    case Family::exponential: return 0.0;
    case Family::reversed_burr: return -1.0 / (p1_ * p2_);
    case Family::ev_weibull: return -1.0 / p1_;
    case Family::pareto:
    case Family::gpd: return p1_;
  }
  return 0.0;
}

std::optional<double> DistributionSpec::true_rho() const {
  switch (family_) {
    case Family::burr: return -1.0 / p2_;
    case Family::frechet: return -1.0;
    default: return std::nullopt;
  }
}

std::optional<double> DistributionSpec::true_rho_tilde() const {
  switch (family_) {
    case Family::frechet:
    case Family::ev_weibull: return -1.0;
    case Family::std_normal:
    case Family::exponential: return 0.0;
    case Family::reversed_burr: return -1.0 / p2_;
    default: return std::nullopt;
  }
}

std::vector<double> sample(const DistributionSpec& spec, std::size_t n, std::uint64_t seed) {
  require(n >= 1, "sample size must be >= 1");
  const CounterRng rng(seed);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = spec.inverse_survival(rng.uniform(i));
  return out;
}

double tail_anchor(const DistributionSpec& spec, double p) {
  return spec.inverse_survival(p);
}

double normal_survival(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double normal_quantile(double p) {
  require_probability(p);
  // Acklam's rational approximation, relative error ~1e-9 before refinement.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // Halley step against the erfc-based cdf; work in the smaller tail.
  const double e = (x < 0.0) ? normal_survival(-x) - p : (1.0 - p) - normal_survival(x);
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

}  // namespace tailforge
