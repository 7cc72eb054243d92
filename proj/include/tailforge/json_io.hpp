#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tailforge/distributions.hpp"
#include "tailforge/error.hpp"
#include "tailforge/inference.hpp"
#include "tailforge/selection.hpp"
#include "tailforge/simharness.hpp"

namespace tailforge {

using Json = nlohmann::json;

// Every document produced by the CLI and the service carries this.
inline constexpr int kSchemaVersion = 1;

Json to_json(const DistributionSpec& spec);
DistributionSpec distribution_from_json(const Json& j);

Json to_json(const MethodConfig& cfg);
// Reads {"method": name, hyperparameters...}; unknown keys are rejected.
MethodConfig method_config_from_json(const Json& j);

Json to_json(const FitResult& fit);

// Optional confidence intervals, one per entry.
struct PathIntervals {
  double level = 0.95;
  std::vector<std::optional<Interval>> intervals;
};

Json to_json(const KPath& path, const PathIntervals* cis = nullptr);
KPath kpath_from_json(const Json& j);

Json to_json(const ExperimentSpec& spec);
ExperimentSpec experiment_from_json(const Json& j);

Json to_json(const CurveSet& curves);
CurveSet curves_from_json(const Json& j);

Json to_json(const GofResult& gof);
Json to_json(const TailEstimate& t);

std::string to_string(ErrorKind kind);
Json error_json(ErrorKind kind, const std::string& message);

}  // namespace tailforge
