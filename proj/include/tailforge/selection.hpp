#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tailforge/empirical.hpp"
#include "tailforge/fit.hpp"

namespace tailforge {

// A method with its hyperparameters.
struct MethodConfig {
  Method method = Method::gpd_ml;
  std::optional<double> a;          // Bernstein degree exponent, m = k^a (Tpbar, Tpbar+)
  std::optional<double> rho;        // Ep+
  std::optional<double> rho_tilde;  // Ep
  std::optional<std::size_t> k_star;  // reference rank (Epbar, Epbar+)
  std::optional<std::size_t> m;       // Bernstein degree at k_star (Epbar, Epbar+)
  std::optional<double> xi0;        // overrides the per-k classical imputation (Ep)
  double tol = 1e-6;
  int max_iter = 50;

  // Throws unless the hyperparameters the method needs are present and valid.
  void validate() const;
  // Compact label such as "Ep(rho_tilde=-1)".
  std::string label() const;
};

// Smallest and largest feasible k for the method on a sample of size n.
std::size_t min_k(Method m);
std::size_t max_k(Method m, std::size_t n);
// Largest k whose exceedances exist on this sample: a positive threshold on
// the Pareto track, a nonnegative sample for k = n on the GPD track.
std::size_t max_k(Method m, const Sample& sample);

// Fits one method at successive k on a fixed sample, sharing work between
// ranks (classical fits for the Ep imputation, the reference transformation
// for Epbar). Not thread-safe; use one per thread.
class PathFitter {
 public:
  PathFitter(const Sample& sample, MethodConfig cfg);

  // Fit at rank k. Errors are reported through the result (converged = false,
  // xi = NaN, message set) rather than thrown.
  FitResult fit(std::size_t k);
  // Same, but throws on failure.
  FitResult fit_or_throw(std::size_t k);

  const MethodConfig& config() const { return cfg_; }
  const Sample& sample() const { return sample_; }

 private:
  const FitResult& classical_gpd(std::size_t k);
  const BernsteinCdf& reference_transform();

  const Sample& sample_;
  MethodConfig cfg_;
  std::map<std::size_t, FitResult> gpd_cache_;
  std::shared_ptr<const BernsteinCdf> reference_;
};

FitResult fit_at_k(const Sample& sample, const MethodConfig& cfg, std::size_t k);

// Fits at every k in ks (each must be feasible for the method).
std::vector<FitResult> fit_path(const Sample& sample, const MethodConfig& cfg, std::span<const std::size_t> ks);

// Path over k_lo..k_hi clipped to the method's feasible range; throws when
// that range is empty. When c is given each entry carries tail_prob(c).
KPath k_path(const Sample& sample, const MethodConfig& cfg, std::size_t k_lo, std::size_t k_hi,
             std::optional<double> c = std::nullopt);

KPath to_kpath(const MethodConfig& cfg, std::span<const FitResult> fits, const Sample& sample,
               std::optional<double> c = std::nullopt);

// Sum of squared deviations of xi over converged entries; nullopt when
// fewer than 80% of the entries converged.
std::optional<double> path_score(const KPath& path);
std::optional<double> path_score(std::span<const FitResult> fits);

struct Selection {
  MethodConfig config;
  double score = 0.0;
  std::vector<std::optional<double>> scores;  // per candidate, nullopt if disqualified
  std::size_t index = 0;
};

// Minimum-variance choice among candidates, scoring each over the ranks ks.
// Ties go to the earlier candidate.
Selection min_variance_select(const Sample& sample, std::span<const MethodConfig> candidates,
                              std::span<const std::size_t> ks);

// Default hyperparameter candidates for a method on a sample of size n.
std::vector<MethodConfig> default_grid(Method method, std::size_t n);

}  // namespace tailforge
