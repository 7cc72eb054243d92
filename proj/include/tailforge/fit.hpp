#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>

#include "tailforge/bernstein.hpp"
#include "tailforge/bias.hpp"

namespace tailforge {

enum class Method {
  pareto_ml,   // Hill / simple Pareto fit to ratios
  gpd_ml,      // GPD fit to excesses
  ep,          // extended GPD, parametric bias
  ep_plus,     // extended Pareto, parametric bias
  epbar,       // extended GPD, Bernstein bias
  epbar_plus,  // extended Pareto, Bernstein bias
  tpbar,       // transformed GPD
  tpbar_plus,  // transformed Pareto
};

// Which limiting model the exceedances are fitted with.
enum class Track { gpd, pareto };

std::string to_string(Method m);
Method method_from_string(const std::string& name);
Track track_of(Method m);
bool is_extended(Method m);
bool is_transformed(Method m);

// Everything needed to evaluate a fitted tail model at one threshold rank.
struct FitResult {
  Method method = Method::gpd_ml;
  std::size_t k = 0;
  std::size_t n = 0;          // sample size (0 when fitted to bare exceedances)
  double threshold = 0.0;     // X_{n-k,n}
  double xi = 0.0;
  std::optional<double> sigma;
  std::optional<double> tau;  // xi / sigma
  std::optional<double> delta;
  double loglik = 0.0;
  bool converged = false;
  int iterations = 0;
  std::string message;
  std::shared_ptr<const BiasFunction> bias;  // extended methods
  std::shared_ptr<const BernsteinCdf> g_hat; // transformed methods
};

}  // namespace tailforge
