#include "tailforge/json_io.hpp"

#include <cmath>
#include <limits>
#include <set>

namespace tailforge {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// JSON has no NaN; null stands in for it in both directions.
Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

double as_number(const Json& j) { return j.is_null() ? kNaN : j.get<double>(); }

template <class F>
auto guarded(const char* what, F f) -> decltype(f()) {
  try {
    return f();
  } catch (const Json::exception& e) {
    fail(ErrorKind::invalid_argument, std::string("malformed ") + what + ": " + e.what());
  }
}

void reject_unknown(const Json& j, const std::set<std::string>& allowed, const char* what) {
  require(j.is_object(), std::string(what) + " must be a JSON object");
  for (const auto& [key, _] : j.items())
    require(allowed.count(key) > 0, std::string("unknown field '") + key + "' in " + what);
}

std::optional<double> opt_double(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

std::optional<std::size_t> opt_size(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  const auto v = j.at(key).get<long long>();
  require(v >= 0, std::string(key) + " must be nonnegative");
  return static_cast<std::size_t>(v);
}

}  // namespace

Json to_json(const DistributionSpec& spec) {
  Json params = Json::object();
  for (const auto& [k, v] : spec.params()) params[k] = v;
  return {{"family", to_string(spec.family())}, {"params", params}};
}

DistributionSpec distribution_from_json(const Json& j) {
  return guarded("distribution", [&] {
    reject_unknown(j, {"family", "params"}, "distribution");
    std::map<std::string, double> params;
    if (j.contains("params"))
      for (const auto& [k, v] : j.at("params").items()) params[k] = v.get<double>();
    return DistributionSpec::from_params(j.at("family").get<std::string>(), params);
  });
}

Json to_json(const MethodConfig& cfg) {
  Json j{{"method", to_string(cfg.method)}};
  if (cfg.a) j["a"] = *cfg.a;
  if (cfg.rho) j["rho"] = *cfg.rho;
  if (cfg.rho_tilde) j["rho_tilde"] = *cfg.rho_tilde;
  if (cfg.k_star) j["k_star"] = *cfg.k_star;
  if (cfg.m) j["m"] = *cfg.m;
  if (cfg.xi0) j["xi0"] = *cfg.xi0;
  j["tol"] = cfg.tol;
  j["max_iter"] = cfg.max_iter;
  return j;
}

MethodConfig method_config_from_json(const Json& j) {
  return guarded("method configuration", [&] {
    reject_unknown(j, {"method", "a", "rho", "rho_tilde", "k_star", "m", "xi0", "tol", "max_iter", "label",
                       "candidates", "select"},
                   "method configuration");
    MethodConfig cfg;
    cfg.method = method_from_string(j.at("method").get<std::string>());
    cfg.a = opt_double(j, "a");
    cfg.rho = opt_double(j, "rho");
    cfg.rho_tilde = opt_double(j, "rho_tilde");
    cfg.k_star = opt_size(j, "k_star");
    cfg.m = opt_size(j, "m");
    cfg.xi0 = opt_double(j, "xi0");
    if (j.contains("tol")) cfg.tol = j.at("tol").get<double>();
    if (j.contains("max_iter")) cfg.max_iter = j.at("max_iter").get<int>();
    return cfg;
  });
}

Json to_json(const FitResult& fit) {
  Json j{{"method", to_string(fit.method)}, {"k", fit.k},           {"n", fit.n},
         {"threshold", number(fit.threshold)}, {"xi", number(fit.xi)}, {"loglik", number(fit.loglik)},
         {"converged", fit.converged},        {"iterations", fit.iterations}};
  if (fit.sigma) j["sigma"] = number(*fit.sigma);
  if (fit.tau) j["tau"] = number(*fit.tau);
  if (fit.delta && is_extended(fit.method)) j["delta"] = number(*fit.delta);
  if (!fit.message.empty()) j["message"] = fit.message;
  return j;
}

Json to_json(const KPath& path, const PathIntervals* cis) {
  Json entries = Json::array();
  for (std::size_t i = 0; i < path.entries.size(); ++i) {
    const auto& e = path.entries[i];
    Json je{{"k", e.k}, {"xi", number(e.xi)}, {"converged", e.converged}};
    if (e.sigma) je["sigma"] = number(*e.sigma);
    if (e.tau) je["tau"] = number(*e.tau);
    if (e.delta) je["delta"] = number(*e.delta);
    if (e.tail_prob) je["tail_prob"] = number(*e.tail_prob);
    if (cis && i < cis->intervals.size() && cis->intervals[i]) {
      const auto& ci = *cis->intervals[i];
      je["ci"] = {{"level", cis->level}, {"lower", number(ci.lower)}, {"upper", number(ci.upper)}};
    }
    entries.push_back(std::move(je));
  }
  return {{"schema_version", kSchemaVersion}, {"method", path.method}, {"entries", entries}};
}

KPath kpath_from_json(const Json& j) {
  return guarded("path", [&] {
    KPath p;
    p.method = j.at("method").get<std::string>();
    for (const auto& je : j.at("entries")) {
      PathEntry e;
      e.k = je.at("k").get<std::size_t>();
      e.xi = as_number(je.at("xi"));
      e.converged = je.at("converged").get<bool>();
      if (je.contains("sigma")) e.sigma = as_number(je.at("sigma"));
      if (je.contains("tau")) e.tau = as_number(je.at("tau"));
      if (je.contains("delta")) e.delta = as_number(je.at("delta"));
      if (je.contains("tail_prob")) e.tail_prob = as_number(je.at("tail_prob"));
      p.entries.push_back(e);
    }
    return p;
  });
}

Json to_json(const ExperimentSpec& spec) {
  Json methods = Json::array();
  for (const auto& m : spec.methods) {
    Json jm = m.candidates.empty() ? to_json(m.config) : Json{{"method", to_string(m.candidates.front().method)}};
    if (!m.candidates.empty()) {
      Json cands = Json::array();
      for (const auto& c : m.candidates) cands.push_back(to_json(c));
      jm["candidates"] = cands;
    }
    if (!m.label.empty()) jm["label"] = m.label;
    methods.push_back(jm);
  }
  Json j{{"schema_version", kSchemaVersion},
         {"distribution", to_json(spec.distribution)},
         {"n", spec.n},
         {"replications", spec.replications},
         {"methods", methods},
         {"p_targets", spec.p_targets},
         {"seed", spec.base_seed},
         {"smoothing_window", spec.smoothing_window}};
  if (!spec.ks.empty()) j["ks"] = spec.ks;
  if (!spec.selection_ks.empty()) j["selection_ks"] = spec.selection_ks;
  return j;
}

ExperimentSpec experiment_from_json(const Json& j) {
  return guarded("experiment", [&] {
    reject_unknown(j, {"schema_version", "distribution", "n", "replications", "methods", "p_targets", "seed",
                       "smoothing_window", "ks", "selection_ks"},
                   "experiment");
    ExperimentSpec spec;
    spec.distribution = distribution_from_json(j.at("distribution"));
    if (j.contains("n")) {
      const auto n = j.at("n").get<long long>();
      require(n >= 1, "n must be positive");
      spec.n = static_cast<std::size_t>(n);
    }
    if (j.contains("replications")) {
      const auto r = j.at("replications").get<long long>();
      require(r >= 1, "replications must be at least 1");
      spec.replications = static_cast<std::size_t>(r);
    }
    if (j.contains("p_targets")) spec.p_targets = j.at("p_targets").get<std::vector<double>>();
    if (j.contains("seed")) spec.base_seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("smoothing_window")) spec.smoothing_window = j.at("smoothing_window").get<std::size_t>();
    if (j.contains("ks")) spec.ks = j.at("ks").get<std::vector<std::size_t>>();
    if (j.contains("selection_ks")) spec.selection_ks = j.at("selection_ks").get<std::vector<std::size_t>>();
    require(j.contains("methods") && j.at("methods").is_array(), "experiment needs a methods array");
    for (const auto& jm : j.at("methods")) {
      ExperimentMethod em;
      em.config = method_config_from_json(jm);
      if (jm.contains("label")) em.label = jm.at("label").get<std::string>();
      if (jm.contains("candidates")) {
        for (const auto& jc : jm.at("candidates")) {
          Json full = jc;
          if (!full.contains("method")) full["method"] = jm.at("method");
          em.candidates.push_back(method_config_from_json(full));
        }
      } else if (jm.value("select", false)) {
        em.candidates = default_grid(em.config.method, spec.n);
      }
      spec.methods.push_back(std::move(em));
    }
    spec.validate();
    return spec;
  });
}

Json to_json(const CurveSet& curves) {
  Json cells = Json::array();
  for (const auto& c : curves.cells) {
    Json bl = Json::array(), rl = Json::array();
    for (double v : c.bias_logp) bl.push_back(number(v));
    for (double v : c.rmse_logp) rl.push_back(number(v));
    cells.push_back({{"method", c.method},
                     {"k", c.k},
                     {"bias_xi", number(c.bias_xi)},
                     {"rmse_xi", number(c.rmse_xi)},
                     {"bias_logp", bl},
                     {"rmse_logp", rl},
                     {"n_ok", c.n_ok},
                     {"n_capped", c.n_capped}});
  }
  return {{"schema_version", kSchemaVersion},
          {"p_targets", curves.p_targets},
          {"cells", cells},
          {"warnings", curves.warnings}};
}

CurveSet curves_from_json(const Json& j) {
  return guarded("curve set", [&] {
    CurveSet c;
    c.p_targets = j.at("p_targets").get<std::vector<double>>();
    if (j.contains("warnings")) c.warnings = j.at("warnings").get<std::vector<std::string>>();
    for (const auto& jc : j.at("cells")) {
      CurveCell cell;
      cell.method = jc.at("method").get<std::string>();
      cell.k = jc.at("k").get<std::size_t>();
      cell.bias_xi = as_number(jc.at("bias_xi"));
      cell.rmse_xi = as_number(jc.at("rmse_xi"));
      for (const auto& v : jc.at("bias_logp")) cell.bias_logp.push_back(as_number(v));
      for (const auto& v : jc.at("rmse_logp")) cell.rmse_logp.push_back(as_number(v));
      cell.n_ok = jc.at("n_ok").get<std::size_t>();
      cell.n_capped = jc.value("n_capped", std::size_t{0});
      c.cells.push_back(std::move(cell));
    }
    return c;
  });
}

Json to_json(const GofResult& gof) {
  Json x = Json::array(), y = Json::array();
  for (const auto& [a, b] : gof.points) {
    x.push_back(number(a));
    y.push_back(number(b));
  }
  return {{"schema_version", kSchemaVersion}, {"x", x}, {"y", y}, {"correlation", number(gof.correlation)}};
}

Json to_json(const TailEstimate& t) {
  return {{"method", to_string(t.method)}, {"k", t.k}, {"value", number(t.value)}, {"threshold", number(t.threshold)}};
}

std::string to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::not_found: return "not_found";
    case ErrorKind::conflict: return "conflict";
    case ErrorKind::infeasible: return "infeasible";
    case ErrorKind::degenerate: return "degenerate";
  }
  return "unknown";
}

Json error_json(ErrorKind kind, const std::string& message) {
  return {{"schema_version", kSchemaVersion}, {"error", {{"kind", to_string(kind)}, {"message", message}}}};
}

}  // namespace tailforge
