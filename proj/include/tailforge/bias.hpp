#pragma once

#include <memory>
#include <string>
#include <variant>

#include "tailforge/bernstein.hpp"

namespace tailforge {

// Second-order perturbation B(u) of a limiting survival function u and its
// density companion b(u) = d/du (u B(u)).
struct ParetoBias {
  double rho;  // B(u) = u^(-rho) - 1
};

struct GpdBias {
  double xi0;        // extreme value index plugged into the bias shape
  double rho_tilde;  // second-order rate, < 0
};

struct BernsteinBias {
  BernsteinCdf g;  // transformation estimate at the reference rank
  std::size_t k_star = 0;
};

class BiasFunction {
 public:
  using Kind = std::variant<ParetoBias, GpdBias, BernsteinBias>;

  static BiasFunction pareto(double rho);
  static BiasFunction gpd(double xi0, double rho_tilde);
  static BiasFunction bernstein(BernsteinCdf g, std::size_t k_star = 0);

  const Kind& kind() const { return kind_; }
  std::string name() const;

  double B(double u) const;
  double b(double u) const;
  double b_prime(double u) const;
  // b and b' evaluated from log u, which likelihood code already has.
  double b_log(double log_u) const;
  double b_prime_log(double log_u) const;

  // Bounds on delta keeping 1 + delta b(u) >= kValidityFloor on a
  // 512-node Chebyshev grid of (0,1).
  double delta_min() const { return delta_min_; }
  double delta_max() const { return delta_max_; }

  // The same shape with a different plugged-in xi0 (GPD kind only; other
  // kinds are returned unchanged).
  BiasFunction with_xi0(double xi0) const;

  static constexpr double kValidityFloor = 1e-6;
  // B is evaluated on [kMinU, 1] for the Bernstein kind.
  static constexpr double kMinU = 1e-6;

 private:
  explicit BiasFunction(Kind kind);
  Kind kind_;
  double delta_min_ = 0.0;
  double delta_max_ = 0.0;
};

// Free-function forms of the bias shapes.
double bias_B_pareto(double rho, double u);
double bias_b_pareto(double rho, double u);
double bias_B_gpd(double xi0, double rho_tilde, double u);
double bias_b_gpd(double xi0, double rho_tilde, double u);
double bias_from_bernstein_B(const BernsteinCdf& g, double u);
double bias_from_bernstein_b(const BernsteinCdf& g, double u);

}  // namespace tailforge
