#include "tailforge/bernstein.hpp"

#include <algorithm>
#include <cmath>

#include "tailforge/empirical.hpp"
#include "tailforge/error.hpp"

namespace tailforge {

namespace {

void require_unit(double u) {
  require(u >= 0.0 && u <= 1.0, "Bernstein argument must lie in [0, 1]");
}

}  // namespace

double bernstein_sum(std::span<const double> c, double u) {
  const std::size_t d = c.size() - 1;
  if (d == 0) return c[0];
  if (u <= 0.0) return c[0];
  if (u >= 1.0) return c[d];

  const double dd = static_cast<double>(d);
  const std::size_t mode = std::min(d, static_cast<std::size_t>(std::floor((dd + 1.0) * u)));
  const double lu = std::log(u);
  const double l1u = std::log1p(-u);
  const double md = static_cast<double>(mode);
  const double log_peak = std::lgamma(dd + 1.0) - std::lgamma(md + 1.0) - std::lgamma(dd - md + 1.0) +
                          md * lu + (dd - md) * l1u;
  const double peak = std::exp(log_peak);
  const double ratio = u / (1.0 - u);
  // Kernel weights decay geometrically away from the mode; stop once they
  // are negligible against the peak.
  const double cutoff = peak * 1e-18;

  double sum = c[mode] * peak;
  double w = peak;
  for (std::size_t j = mode; j < d; ++j) {
    w *= static_cast<double>(d - j) / static_cast<double>(j + 1) * ratio;
    if (w < cutoff) break;
    sum += c[j + 1] * w;
  }
  w = peak;
  for (std::size_t j = mode; j > 0; --j) {
    w *= static_cast<double>(j) / static_cast<double>(d - j + 1) / ratio;
    if (w < cutoff) break;
    sum += c[j - 1] * w;
  }
  return sum;
}

BernsteinCdf::BernsteinCdf(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
  require(coeffs_.size() >= 2, "Bernstein degree must be >= 1");
  for (double c : coeffs_) require(std::isfinite(c), "Bernstein coefficients must be finite");
  const std::size_t m = degree();
  const double md = static_cast<double>(m);
  diff1_.resize(m);
  for (std::size_t j = 0; j < m; ++j) diff1_[j] = md * (coeffs_[j + 1] - coeffs_[j]);
  if (m >= 2) {
    diff2_.resize(m - 1);
    for (std::size_t j = 0; j + 1 < m; ++j) diff2_[j] = (md - 1.0) * (diff1_[j + 1] - diff1_[j]);
  } else {
    diff2_.assign(1, 0.0);
  }
  identity_ = true;
  for (std::size_t j = 0; j <= m && identity_; ++j) identity_ = coeffs_[j] == static_cast<double>(j) / md;
}

BernsteinCdf BernsteinCdf::identity(std::size_t m) {
  require(m >= 1, "Bernstein degree must be >= 1");
  std::vector<double> c(m + 1);
  for (std::size_t j = 0; j <= m; ++j) c[j] = static_cast<double>(j) / static_cast<double>(m);
  c[m] = 1.0;
  return BernsteinCdf(std::move(c));
}

double BernsteinCdf::cdf(double u) const { return identity_ ? u : bernstein_sum(coeffs_, u); }

double BernsteinCdf::pdf(double u) const { return identity_ ? 1.0 : bernstein_sum(diff1_, u); }

double BernsteinCdf::pdf_derivative(double u) const { return identity_ ? 0.0 : bernstein_sum(diff2_, u); }

double eval_cdf(const BernsteinCdf& b, double u) {
  require_unit(u);
  return b.cdf(u);
}

double eval_pdf(const BernsteinCdf& b, double u) {
  require_unit(u);
  return b.pdf(u);
}

BernsteinCdf fit_bernstein(std::span<const double> values, std::size_t m) {
  require(!values.empty(), "Bernstein fit needs at least one value");
  require(m >= 1, "Bernstein degree must be >= 1");
  for (double v : values) require(v >= 0.0 && v <= 1.0, "Bernstein fit values must lie in [0, 1]");
  const EmpiricalCdf ecdf = empirical_cdf(values);
  std::vector<double> c(m + 1);
  for (std::size_t j = 0; j <= m; ++j) c[j] = ecdf(static_cast<double>(j) / static_cast<double>(m));
  return BernsteinCdf(std::move(c));
}

std::size_t bernstein_degree(std::size_t k, double a) {
  require(a > 0.0 && a <= 1.0, "degree exponent a must lie in (0, 1]");
  const double m = std::round(std::pow(static_cast<double>(k), a));
  return std::max<std::size_t>(1, static_cast<std::size_t>(m));
}

}  // namespace tailforge
