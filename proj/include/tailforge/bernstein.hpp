#pragma once

#include <span>
#include <vector>

namespace tailforge {

// Sum_j c_j * C(d,j) u^j (1-u)^(d-j) for d = coeffs.size() - 1, evaluated
// from the dominant kernel outwards in log space; safe for d up to ~1e6.
double bernstein_sum(std::span<const double> coeffs, double u);

// Bernstein polynomial approximation of a distribution function on [0,1],
// defined by its values c_j = G(j/m) on the uniform grid.
class BernsteinCdf {
 public:
  explicit BernsteinCdf(std::vector<double> coeffs);

  // Degree-m identity G(u) = u.
  static BernsteinCdf identity(std::size_t m);

  std::size_t degree() const { return coeffs_.size() - 1; }
  // Coefficients exactly j/m; evaluation then returns u, 1 and 0 exactly.
  bool is_identity() const { return identity_; }
  std::span<const double> coeffs() const { return coeffs_; }

  double cdf(double u) const;
  // Exact derivative m * sum (c_{j+1} - c_j) b_{j,m-1}(u).
  double pdf(double u) const;
  // Second derivative, used by likelihood gradients.
  double pdf_derivative(double u) const;

 private:
  std::vector<double> coeffs_;
  std::vector<double> diff1_;  // m * (c_{j+1} - c_j)
  std::vector<double> diff2_;  // m (m-1) * second differences
  bool identity_ = false;
};

double eval_cdf(const BernsteinCdf& b, double u);
double eval_pdf(const BernsteinCdf& b, double u);

// Plug-in estimator: coefficients from the empirical cdf of values in [0,1].
BernsteinCdf fit_bernstein(std::span<const double> values, std::size_t m);

// Degree from the exponent slider: m = max(1, round(k^a)).
std::size_t bernstein_degree(std::size_t k, double a);

// Lower bound applied to Bernstein densities inside log-likelihoods.
inline constexpr double kDensityFloor = 1e-12;

}  // namespace tailforge
