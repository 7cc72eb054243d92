#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace tailforge {

enum class Family {
  burr,           // survival (1 + x^tau)^(-lambda), x > 0
  frechet,        // cdf exp(-x^(-alpha)), x > 0
  std_normal,
  exponential,    // survival exp(-lambda x), x > 0
  reversed_burr,  // survival (1 + (1-x)^(-tau))^(-lambda), x < 1
  ev_weibull,     // cdf exp(-(1-x)^alpha), x < 1
  pareto,         // survival x^(-1/xi), x > 1
  gpd,            // survival (1 + xi x / sigma)^(-1/xi), x > 0
};

std::string to_string(Family f);
Family family_from_string(const std::string& name);

// A validated, immutable test distribution. Construct through the named
// factories; parameters are checked once at construction.
class DistributionSpec {
 public:
  static DistributionSpec burr(double tau, double lambda);
  static DistributionSpec frechet(double alpha);
  static DistributionSpec std_normal();
  static DistributionSpec exponential(double lambda);
  static DistributionSpec reversed_burr(double tau, double lambda);
  static DistributionSpec ev_weibull(double alpha);
  static DistributionSpec pareto(double xi);
  static DistributionSpec gpd(double xi, double sigma);

  // Builds from a family name and named parameters, e.g. ("burr", {tau, lambda}).
  static DistributionSpec from_params(const std::string& family,
                                      const std::map<std::string, double>& params);

  Family family() const { return family_; }
  std::map<std::string, double> params() const;

  // F̄(x) = P(X > x).
  double survival(double x) const;
  double cdf(double x) const;
  // Q(p) with F(Q(p)) = p, p in (0,1).
  double quantile(double p) const;
  // c with F̄(c) = s, s in (0,1); computed directly from the upper tail.
  double inverse_survival(double s) const;
  double lower_endpoint() const;
  double upper_endpoint() const;

  // Ground truth tail parameters.
  double true_xi() const;
  // Second-order parameter for Pareto-type families (rho) if defined.
  std::optional<double> true_rho() const;
  // Second-order parameter of the GPD approximation (rho tilde) if defined.
  std::optional<double> true_rho_tilde() const;

 private:
  DistributionSpec(Family f, double p1, double p2) : family_(f), p1_(p1), p2_(p2) {}

  Family family_;
  double p1_ = 0.0;
  double p2_ = 0.0;
};

// n i.i.d. inverse-transform draws; identical seed gives identical output.
std::vector<double> sample(const DistributionSpec& spec, std::size_t n, std::uint64_t seed);

// c with survival(c) = p: the evaluation point for tail-probability benchmarks.
double tail_anchor(const DistributionSpec& spec, double p);

// Standard normal quantile: rational approximation plus one Halley step.
double normal_quantile(double p);
double normal_survival(double x);

}  // namespace tailforge
