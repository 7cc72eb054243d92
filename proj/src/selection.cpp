#include "tailforge/selection.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "tailforge/bias.hpp"
#include "tailforge/error.hpp"
#include "tailforge/extended.hpp"
#include "tailforge/gpd.hpp"
#include "tailforge/inference.hpp"
#include "tailforge/transform.hpp"

namespace tailforge {

namespace {

ExceedanceMode mode_of(Method m) {
  return track_of(m) == Track::pareto ? ExceedanceMode::ratio : ExceedanceMode::difference;
}

FitResult from_transform(const TransformFit& t, Method method, const ExceedanceSet& ex) {
  FitResult r;
  r.method = method;
  r.k = ex.k;
  r.threshold = ex.threshold;
  r.xi = t.xi;
  r.sigma = t.sigma;
  r.tau = t.tau;
  r.loglik = t.loglik;
  r.converged = t.converged;
  r.iterations = t.iterations;
  r.message = t.message;
  r.g_hat = std::make_shared<const BernsteinCdf>(t.g);
  return r;
}

}  // namespace

void MethodConfig::validate() const {
  require(tol > 0.0, "tol must be positive");
  require(max_iter >= 0, "max_iter must be nonnegative");
  switch (method) {
    case Method::pareto_ml:
    case Method::gpd_ml: break;
    case Method::ep:
      require(rho_tilde.has_value(), "Ep needs rho_tilde");
      require(*rho_tilde < 0.0, "rho_tilde must be negative");
      if (xi0) require(std::isfinite(*xi0), "xi0 must be finite");
      break;
    case Method::ep_plus:
      require(rho.has_value(), "Ep+ needs rho");
      require(*rho < 0.0, "rho must be negative");
      break;
    case Method::epbar:
    case Method::epbar_plus:
      require(k_star.has_value() && m.has_value(), to_string(method) + " needs k_star and m");
      require(*k_star >= 5, "k_star must be at least 5");
      require(*m >= 1, "m must be positive");
      break;
    case Method::tpbar:
    case Method::tpbar_plus:
      require(a.has_value(), to_string(method) + " needs a");
      require(*a > 0.0 && *a <= 1.0, "a must lie in (0, 1]");
      break;
  }
}

std::string MethodConfig::label() const {
  std::ostringstream os;
  os << to_string(method);
  std::vector<std::string> parts;
  auto add = [&](const char* name, auto v) {
    std::ostringstream p;
    p << name << '=' << v;
    parts.push_back(p.str());
  };
  if (rho) add("rho", *rho);
  if (rho_tilde) add("rho_tilde", *rho_tilde);
  if (a) add("a", *a);
  if (k_star) add("k_star", *k_star);
  if (m) add("m", *m);
  if (xi0) add("xi0", *xi0);
  if (!parts.empty()) {
    os << '(';
    for (std::size_t i = 0; i < parts.size(); ++i) os << (i ? ";" : "") << parts[i];
    os << ')';
  }
  return os.str();
}

std::size_t min_k(Method m) { return m == Method::pareto_ml ? 2 : 5; }

std::size_t max_k(Method m, std::size_t n) { return track_of(m) == Track::pareto ? n - 1 : n; }

std::size_t max_k(Method m, const Sample& sample) {
  const std::size_t n = sample.size();
  if (n == 0) return 0;
  if (track_of(m) == Track::gpd) return sample.min() >= 0.0 ? n : n - 1;
  // X_{n-k,n} > 0 holds exactly for k below the number of positive values.
  const auto values = sample.values();
  const auto positives = static_cast<std::size_t>(values.end() - std::upper_bound(values.begin(), values.end(), 0.0));
  return std::min(n - 1, positives == 0 ? 0 : positives - 1);
}

PathFitter::PathFitter(const Sample& sample, MethodConfig cfg) : sample_(sample), cfg_(std::move(cfg)) {
  cfg_.validate();
  require(sample_.size() >= 2, "sample needs at least two observations");
}

const FitResult& PathFitter::classical_gpd(std::size_t k) {
  auto it = gpd_cache_.find(k);
  if (it == gpd_cache_.end()) it = gpd_cache_.emplace(k, fit_gpd_ml(exceedances(sample_, k, ExceedanceMode::difference))).first;
  return it->second;
}

const BernsteinCdf& PathFitter::reference_transform() {
  if (!reference_) {
    const std::size_t ks = *cfg_.k_star;
    if (ks > max_k(cfg_.method, sample_.size())) fail(ErrorKind::infeasible, "k_star exceeds the feasible range");
    const Track track = track_of(cfg_.method);
    const auto ex = exceedances(sample_, ks, mode_of(cfg_.method));
    const auto t = fit_transform(ex, *cfg_.m, track, {cfg_.tol, cfg_.max_iter});
    reference_ = std::make_shared<const BernsteinCdf>(t.g);
  }
  return *reference_;
}

FitResult PathFitter::fit_or_throw(std::size_t k) {
  const Method method = cfg_.method;
  if (k < min_k(method) || k > max_k(method, sample_.size()))
    fail(ErrorKind::invalid_argument, "k = " + std::to_string(k) + " is outside the feasible range of " + to_string(method));
  const auto ex = exceedances(sample_, k, mode_of(method));
  FitResult r;
  switch (method) {
    case Method::pareto_ml: r = fit_pareto_ml(ex); break;
    case Method::gpd_ml: r = classical_gpd(k); break;
    case Method::ep: {
      const FitResult& ml = classical_gpd(k);
      const double xi0 = cfg_.xi0.value_or(ml.xi);
      ExtendedOptions opts;
      opts.start = ml;
      r = fit_extended_gpd(ex, BiasFunction::gpd(xi0, *cfg_.rho_tilde), opts);
      break;
    }
    case Method::ep_plus: r = fit_extended_pareto(ex, BiasFunction::pareto(*cfg_.rho)); break;
    case Method::epbar: {
      ExtendedOptions opts;
      opts.start = classical_gpd(k);
      r = fit_extended_gpd(ex, BiasFunction::bernstein(reference_transform(), *cfg_.k_star), opts);
      break;
    }
    case Method::epbar_plus:
      r = fit_extended_pareto(ex, BiasFunction::bernstein(reference_transform(), *cfg_.k_star));
      break;
    case Method::tpbar:
    case Method::tpbar_plus: {
      const std::size_t m = bernstein_degree(k, *cfg_.a);
      r = from_transform(fit_transform(ex, m, track_of(method), {cfg_.tol, cfg_.max_iter}), method, ex);
      break;
    }
  }
  r.method = method;
  r.k = k;
  r.n = sample_.size();
  r.threshold = ex.threshold;
  return r;
}

FitResult PathFitter::fit(std::size_t k) {
  try {
    return fit_or_throw(k);
  } catch (const Error& e) {
    FitResult r;
    r.method = cfg_.method;
    r.k = k;
    r.n = sample_.size();
    r.xi = std::numeric_limits<double>::quiet_NaN();
    r.converged = false;
    r.message = e.what();
    return r;
  }
}

FitResult fit_at_k(const Sample& sample, const MethodConfig& cfg, std::size_t k) {
  return PathFitter(sample, cfg).fit_or_throw(k);
}

std::vector<FitResult> fit_path(const Sample& sample, const MethodConfig& cfg, std::span<const std::size_t> ks) {
  PathFitter fitter(sample, cfg);
  std::vector<FitResult> out;
  out.reserve(ks.size());
  for (std::size_t k : ks) out.push_back(fitter.fit(k));
  return out;
}

KPath to_kpath(const MethodConfig& cfg, std::span<const FitResult> fits, const Sample& sample, std::optional<double> c) {
  KPath path;
  path.method = to_string(cfg.method);
  for (const auto& f : fits) {
    PathEntry e;
    e.k = f.k;
    e.xi = f.xi;
    e.sigma = f.sigma;
    e.tau = f.tau;
    e.delta = is_extended(f.method) ? f.delta : std::nullopt;
    e.converged = f.converged;
    if (c && std::isfinite(f.xi) && *c >= f.threshold) {
      try {
        e.tail_prob = tail_prob(f, *c, sample.size()).value;
      } catch (const Error&) {
      }
    }
    path.entries.push_back(e);
  }
  return path;
}

KPath k_path(const Sample& sample, const MethodConfig& cfg, std::size_t k_lo, std::size_t k_hi, std::optional<double> c) {
  cfg.validate();
  const std::size_t lo = std::max(k_lo, min_k(cfg.method));
  const std::size_t hi = std::min(k_hi, max_k(cfg.method, sample));
  if (lo > hi) fail(ErrorKind::infeasible, "no feasible k in the requested range for " + to_string(cfg.method));
  std::vector<std::size_t> ks;
  for (std::size_t k = lo; k <= hi; ++k) ks.push_back(k);
  const auto fits = fit_path(sample, cfg, ks);
  return to_kpath(cfg, fits, sample, c);
}

namespace {

template <class Range, class Xi, class Ok>
std::optional<double> score_of(const Range& r, Xi xi, Ok ok) {
  std::size_t total = 0, used = 0;
  double sum = 0.0;
  for (const auto& e : r) {
    ++total;
    if (ok(e) && std::isfinite(xi(e))) {
      ++used;
      sum += xi(e);
    }
  }
  if (total == 0 || used == 0 || static_cast<double>(used) < 0.8 * static_cast<double>(total)) return std::nullopt;
  const double mean = sum / static_cast<double>(used);
  double ss = 0.0;
  for (const auto& e : r) {
    if (ok(e) && std::isfinite(xi(e))) ss += (xi(e) - mean) * (xi(e) - mean);
  }
  return ss;
}

}  // namespace

std::optional<double> path_score(const KPath& path) {
  return score_of(path.entries, [](const PathEntry& e) { return e.xi; }, [](const PathEntry& e) { return e.converged; });
}

std::optional<double> path_score(std::span<const FitResult> fits) {
  return score_of(fits, [](const FitResult& f) { return f.xi; }, [](const FitResult& f) { return f.converged; });
}

Selection min_variance_select(const Sample& sample, std::span<const MethodConfig> candidates,
                              std::span<const std::size_t> ks) {
  require(!candidates.empty(), "candidate grid is empty");
  require(!ks.empty(), "k grid is empty");
  Selection sel;
  bool found = false;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto fits = fit_path(sample, candidates[i], ks);
    const auto s = path_score(fits);
    sel.scores.push_back(s);
    if (s && (!found || *s < sel.score)) {
      found = true;
      sel.score = *s;
      sel.index = i;
      sel.config = candidates[i];
    }
  }
  if (!found) fail(ErrorKind::infeasible, "every candidate failed on the k grid");
  return sel;
}

std::vector<MethodConfig> default_grid(Method method, std::size_t n) {
  std::vector<MethodConfig> out;
  MethodConfig base;
  base.method = method;
  const double second_order[] = {-0.25, -0.5, -1.0, -2.0};
  switch (method) {
    case Method::pareto_ml:
    case Method::gpd_ml: out.push_back(base); break;
    case Method::ep:
      for (double r : second_order) {
        base.rho_tilde = r;
        out.push_back(base);
      }
      break;
    case Method::ep_plus:
      for (double r : second_order) {
        base.rho = r;
        out.push_back(base);
      }
      break;
    case Method::epbar:
    case Method::epbar_plus:
      for (std::size_t ks : {n / 4, n / 2, 3 * n / 4}) {
        if (ks < 5) continue;
        for (std::size_t m : {std::size_t{10}, std::size_t{25}, std::size_t{50}, std::min<std::size_t>(100, ks)}) {
          base.k_star = ks;
          base.m = m;
          out.push_back(base);
        }
      }
      break;
    case Method::tpbar:
    case Method::tpbar_plus:
      for (double a : {0.5, 0.6, 0.7, 0.8, 0.9, 0.99}) {
        base.a = a;
        out.push_back(base);
      }
      break;
  }
  return out;
}

}  // namespace tailforge
