#include "tailforge/bias.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "tailforge/error.hpp"

namespace tailforge {

namespace {

constexpr double kXiEps = 1e-6;

// (u^(-s) - 1) / s with its s -> 0 limit -log(u).
double power_ratio(double log_u, double s) {
  const double y = -s * log_u;
  if (std::abs(s) < kXiEps) {
    const double series = 1.0 + y / 2.0 + y * y / 6.0 + y * y * y / 24.0 + y * y * y * y / 120.0;
    return -log_u * series;
  }
  return std::expm1(y) / s;
}

// u^w (u^(-s) - 1) / s. Far from u = 1 the factors over- and underflow
// separately, so the difference form is used there.
double weighted_ratio(double log_u, double w, double s) {
  if (std::abs(s) >= kXiEps && std::abs(s * log_u) > 30.0)
    return (std::exp((w - s) * log_u) - std::exp(w * log_u)) / s;
  return std::exp(w * log_u) * power_ratio(log_u, s);
}

// u^xi times the bracket of the GPD bias shape.
double gpd_shape(double log_u, double xi, double rt) {
  return weighted_ratio(log_u, xi, xi + rt) - weighted_ratio(log_u, xi, xi);
}

void require_unit_open(double u) {
  require(u > 0.0 && u <= 1.0, "bias argument must lie in (0, 1]");
}

}  // namespace

double bias_B_pareto(double rho, double u) {
  require(rho < 0.0, "rho must be negative");
  require_unit_open(u);
  return std::pow(u, -rho) - 1.0;
}

double bias_b_pareto(double rho, double u) {
  require(rho < 0.0, "rho must be negative");
  require_unit_open(u);
  return (1.0 - rho) * std::pow(u, -rho) - 1.0;
}

double bias_B_gpd(double xi, double rt, double u) {
  require(rt < 0.0, "rho tilde must be negative");
  require_unit_open(u);
  return gpd_shape(std::log(u), xi, rt) / rt;
}

double bias_b_gpd(double xi, double rt, double u) {
  require(rt < 0.0, "rho tilde must be negative");
  require_unit_open(u);
  const double lu = std::log(u);
  return ((1.0 + xi) * gpd_shape(lu, xi, rt) - std::exp(-rt * lu) + 1.0) / rt;
}

double bias_from_bernstein_B(const BernsteinCdf& g, double u) {
  require(u >= 0.0 && u <= 1.0, "bias argument must lie in [0, 1]");
  const double v = std::max(u, BiasFunction::kMinU);
  return (g.cdf(v) - v) / v;
}

double bias_from_bernstein_b(const BernsteinCdf& g, double u) {
  require(u >= 0.0 && u <= 1.0, "bias argument must lie in [0, 1]");
  return g.pdf(u) - 1.0;
}

BiasFunction BiasFunction::pareto(double rho) {
  require(std::isfinite(rho) && rho < 0.0, "rho must be finite and negative");
  return BiasFunction(ParetoBias{rho});
}

BiasFunction BiasFunction::gpd(double xi0, double rho_tilde) {
  require(std::isfinite(xi0), "xi0 must be finite");
  require(std::isfinite(rho_tilde) && rho_tilde < 0.0, "rho tilde must be finite and negative");
  return BiasFunction(GpdBias{xi0, rho_tilde});
}

BiasFunction BiasFunction::bernstein(BernsteinCdf g, std::size_t k_star) {
  return BiasFunction(BernsteinBias{std::move(g), k_star});
}

BiasFunction::BiasFunction(Kind kind) : kind_(std::move(kind)) {
  constexpr int kGrid = 512;
  std::vector<double> nodes(kGrid), values(kGrid);
  for (int i = 0; i < kGrid; ++i) {
    nodes[i] = 0.5 * (1.0 - std::cos((2.0 * i + 1.0) * std::numbers::pi / (2.0 * kGrid)));
    values[i] = b(nodes[i]);
  }
  // An extremum between two nodes can overshoot the grid value; polish the
  // extreme nodes between their neighbours.
  auto refine = [&](std::size_t i, double sign) {
    const double lo = i == 0 ? nodes[0] : nodes[i - 1];
    const double hi = i + 1 == nodes.size() ? nodes[i] : nodes[i + 1];
    const auto [u, v] = boost::math::tools::brent_find_minima([&](double x) { return sign * b(x); }, lo, hi,
                                                             std::numeric_limits<double>::digits / 2);
    return std::min(sign * values[i], v) * sign;
  };
  const auto [imin, imax] = std::minmax_element(values.begin(), values.end());
  const double bmin = refine(static_cast<std::size_t>(imin - values.begin()), 1.0);
  const double bmax = refine(static_cast<std::size_t>(imax - values.begin()), -1.0);
  constexpr double kCap = 1e6;
  delta_min_ = bmax > 0.0 ? std::max(-kCap, (kValidityFloor - 1.0) / bmax) : -kCap;
  delta_max_ = bmin < 0.0 ? std::min(kCap, (1.0 - kValidityFloor) / -bmin) : kCap;
}

std::string BiasFunction::name() const {
  struct Visitor {
    std::string operator()(const ParetoBias&) const { return "pareto"; }
    std::string operator()(const GpdBias&) const { return "gpd"; }
    std::string operator()(const BernsteinBias&) const { return "bernstein"; }
  };
  return std::visit(Visitor{}, kind_);
}

double BiasFunction::B(double u) const {
  if (const auto* p = std::get_if<ParetoBias>(&kind_)) return std::pow(u, -p->rho) - 1.0;
  if (const auto* g = std::get_if<GpdBias>(&kind_)) return bias_B_gpd(g->xi0, g->rho_tilde, u);
  const auto& bb = std::get<BernsteinBias>(kind_);
  const double v = std::max(u, kMinU);
  return (bb.g.cdf(v) - v) / v;
}

double BiasFunction::b(double u) const {
  if (const auto* p = std::get_if<ParetoBias>(&kind_)) return (1.0 - p->rho) * std::pow(u, -p->rho) - 1.0;
  if (std::holds_alternative<GpdBias>(kind_)) return b_log(std::log(u));
  return std::get<BernsteinBias>(kind_).g.pdf(u) - 1.0;
}

double BiasFunction::b_prime(double u) const {
  if (const auto* p = std::get_if<ParetoBias>(&kind_))
    return -p->rho * (1.0 - p->rho) * std::pow(u, -p->rho - 1.0);
  if (std::holds_alternative<GpdBias>(kind_)) return b_prime_log(std::log(u));
  return std::get<BernsteinBias>(kind_).g.pdf_derivative(u);
}

double BiasFunction::b_log(double lu) const {
  if (const auto* p = std::get_if<ParetoBias>(&kind_)) return (1.0 - p->rho) * std::exp(-p->rho * lu) - 1.0;
  if (const auto* g = std::get_if<GpdBias>(&kind_)) {
    const double shape = gpd_shape(lu, g->xi0, g->rho_tilde);
    return ((1.0 + g->xi0) * shape - std::exp(-g->rho_tilde * lu) + 1.0) / g->rho_tilde;
  }
  return std::get<BernsteinBias>(kind_).g.pdf(std::exp(lu)) - 1.0;
}

double BiasFunction::b_prime_log(double lu) const {
  if (const auto* p = std::get_if<ParetoBias>(&kind_))
    return -p->rho * (1.0 - p->rho) * std::exp((-p->rho - 1.0) * lu);
  if (const auto* g = std::get_if<GpdBias>(&kind_)) {
    const double xi = g->xi0, rt = g->rho_tilde;
    const double inner = xi * gpd_shape(lu, xi, rt) - std::exp(-rt * lu) + 1.0;
    return ((1.0 + xi) * std::exp(-lu) * inner + rt * std::exp(-(rt + 1.0) * lu)) / rt;
  }
  return std::get<BernsteinBias>(kind_).g.pdf_derivative(std::exp(lu));
}

BiasFunction BiasFunction::with_xi0(double xi0) const {
  if (const auto* g = std::get_if<GpdBias>(&kind_)) return gpd(xi0, g->rho_tilde);
  return *this;
}

}  // namespace tailforge
