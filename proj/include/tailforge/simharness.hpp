#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tailforge/distributions.hpp"
#include "tailforge/selection.hpp"

namespace tailforge {

// One estimator in an experiment. With candidates, each replication first
// picks a configuration by the minimum-variance principle over
// selection_ks and then fits it at every k.
struct ExperimentMethod {
  MethodConfig config;
  std::vector<MethodConfig> candidates;
  std::string label;  // defaults to config.label() or "<method>(min-variance)"

  std::string display_label() const;
};

struct ExperimentSpec {
  DistributionSpec distribution = DistributionSpec::pareto(1.0);
  std::size_t n = 200;
  std::size_t replications = 500;
  std::vector<ExperimentMethod> methods;
  std::vector<double> p_targets{0.005, 0.003};
  std::uint64_t base_seed = 1;
  std::size_t smoothing_window = 1;
  std::vector<std::size_t> ks;            // empty: default grid
  std::vector<std::size_t> selection_ks;  // empty: same as ks

  void validate() const;
};

// Every k in [5, n-1] up to n = 200, else 100 geometric points.
std::vector<std::size_t> default_k_grid(std::size_t n);

struct CurveCell {
  std::string method;
  std::size_t k = 0;
  double bias_xi = 0.0;
  double rmse_xi = 0.0;
  std::vector<double> bias_logp;  // per p target
  std::vector<double> rmse_logp;
  std::size_t n_ok = 0;      // converged replications
  std::size_t n_capped = 0;  // tail estimates whose log ratio hit the cap

  bool operator==(const CurveCell&) const = default;
};

struct CurveSet {
  std::vector<double> p_targets;
  std::vector<CurveCell> cells;
  std::vector<std::string> warnings;  // per-method problems; not part of the curves

  // Equality of the curves themselves (warnings are ignored).
  bool same_curves(const CurveSet& other) const;
};

inline constexpr double kLogRatioCap = 50.0;

// Runs the Monte Carlo study; replication r uses seed base_seed ^ r. Worker
// count comes from TAILFORGE_THREADS (default: hardware concurrency); the
// result does not depend on it.
CurveSet run_experiment(const ExperimentSpec& spec);

enum class ExportFormat { json, csv };

std::string export_curves(const CurveSet& curves, ExportFormat format);
CurveSet import_curves(const std::string& text, ExportFormat format);

// Worker count from TAILFORGE_THREADS, at least 1.
unsigned worker_threads();

}  // namespace tailforge
