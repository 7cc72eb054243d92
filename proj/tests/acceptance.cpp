// Acceptance run: one PASS/FAIL line per criterion on stdout, details on
// stderr. Exit status is the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "tailforge/bernstein.hpp"
#include "tailforge/bias.hpp"
#include "tailforge/distributions.hpp"
#include "tailforge/empirical.hpp"
#include "tailforge/error.hpp"
#include "tailforge/extended.hpp"
#include "tailforge/gpd.hpp"
#include "tailforge/inference.hpp"
#include "tailforge/selection.hpp"
#include "tailforge/simharness.hpp"
#include "tailforge/transform.hpp"

using namespace tailforge;

namespace {

constexpr std::size_t kReps = 500;
constexpr std::size_t kN = 200;
constexpr std::uint64_t kSeed = 20240607;

int failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail) {
  std::printf("%s [%d] %s: %s\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// Monte Carlo standard error of a cell mean.
double cell_se(const CurveCell& c) {
  return std::sqrt(std::max(0.0, c.rmse_xi * c.rmse_xi - c.bias_xi * c.bias_xi) / static_cast<double>(c.n_ok));
}

const CurveCell& cell(const CurveSet& cs, const std::string& label, std::size_t k) {
  for (const auto& c : cs.cells)
    if (c.method == label && c.k == k) return c;
  throw std::runtime_error("missing cell " + label + " at k=" + std::to_string(k));
}

ExperimentMethod fixed(Method m, std::optional<double> rho = {}, std::optional<double> rho_tilde = {}) {
  ExperimentMethod em;
  em.config.method = m;
  em.config.rho = rho;
  em.config.rho_tilde = rho_tilde;
  return em;
}

// |bias(new)| < |bias(old)|, failing only when the reverse holds beyond
// three standard errors of the difference.
bool not_worse(const CurveCell& fresh, const CurveCell& base, std::string& detail) {
  const double margin = 3.0 * std::hypot(cell_se(fresh), cell_se(base));
  const bool strict = std::abs(fresh.bias_xi) < std::abs(base.bias_xi);
  const bool ok = std::abs(fresh.bias_xi) < std::abs(base.bias_xi) + margin;
  detail += fmt(" %s@k=%zu %+.4f vs %s %+.4f (3se %.4f%s);", fresh.method.c_str(), fresh.k, fresh.bias_xi,
                base.method.c_str(), base.bias_xi, margin, strict ? "" : ", within margin only");
  return ok;
}

// ---------------------------------------------------------------------------

void variance_formulas() {
  double worst = 0.0;
  for (double rho : {-0.25, -0.5, -1.0, -2.0}) {
    for (double xi : {0.25, 0.5, 1.0}) {
      const std::size_t k = 100;
      const double expect = xi * xi * std::pow((1.0 - rho) / rho, 2) / k;
      worst = std::max(worst, rel_err(var_xi_eplus(xi, functionals(BiasFunction::pareto(rho), xi), k), expect));
    }
  }
  for (double xi : {-0.2, 0.0, 0.5, 1.0}) {
    for (double rt : {-0.5, -1.0, -2.0}) {
      const std::size_t k = 100;
      const double expect = (1.0 + xi) * (1.0 + xi) * std::pow((1.0 - rt) / rt, 2) / k;
      worst = std::max(worst, rel_err(cov_xi_tau_e(xi, BiasFunction::gpd(xi, rt), k)[0][0], expect));
    }
  }
  report(1, "variance formulas", worst <= 1e-6, fmt("max relative error %.2e (tol 1e-6)", worst));
}

void functional_anchors() {
  const auto q = functionals(BiasFunction::gpd(0.5, -1.0), 0.5);
  const auto c = gpd_functionals(0.5, -1.0);
  const double err = std::max({std::abs(q.EB - 1.0 / 3.0), std::abs(q.EC - 1.0 / 7.5), std::abs(q.Eb2 - 2.0 / 15.0),
                               std::abs(c.EB - 1.0 / 3.0), std::abs(c.EC - 1.0 / 7.5), std::abs(c.Eb2 - 2.0 / 15.0)});
  report(2, "closed-form functional anchors", err <= 1e-8,
         fmt("EB=%.12f EC=%.12f Eb2=%.12f, max error %.2e (tol 1e-8)", q.EB, q.EC, q.Eb2, err));
}

void reductions() {
  double ext = 0.0, trans = 0.0;
  bool tail_exact = true;
  ExtendedOptions zero;
  zero.fixed_delta = 0.0;
  for (std::uint64_t r = 0; r < 10; ++r) {
    const Sample s(sample(r % 2 ? DistributionSpec::frechet(2) : DistributionSpec::burr(1, 2), kN, kSeed + r));
    for (std::size_t k : {20u, 60u, 150u}) {
      const auto ratio = exceedances(s, k, ExceedanceMode::ratio);
      ext = std::max(ext, std::abs(fit_extended_pareto(ratio, BiasFunction::pareto(-0.5), zero).xi -
                                   fit_pareto_ml(ratio).xi));
      const auto diff = exceedances(s, k, ExceedanceMode::difference);
      const auto ml = fit_gpd_ml(diff);
      ext = std::max(ext, std::abs(fit_extended_gpd(diff, BiasFunction::gpd(ml.xi, -1.0), zero).xi - ml.xi));
      const auto t = fit_transform(diff, 1, Track::gpd);
      trans = std::max(trans, std::abs(t.xi - ml.xi));

      FitResult plain = ml;
      plain.k = k;
      plain.threshold = diff.threshold;
      FitResult tf = plain;
      tf.method = Method::tpbar;
      tf.g_hat = std::make_shared<BernsteinCdf>(BernsteinCdf::identity(7));
      for (double c : {diff.threshold, diff.threshold + 1.0, s.max(), 2.0 * s.max()})
        tail_exact = tail_exact && tail_prob(tf, c, kN).value == tail_prob(plain, c, kN).value;
    }
  }
  report(3, "reduction identities", ext <= 1e-8 && trans <= 1e-8 && tail_exact,
         fmt("delta=0 max |dxi| %.2e, m=1 max |dxi| %.2e (tol 1e-8), identity tail exact: %s", ext, trans,
             tail_exact ? "yes" : "no"));
}

void bias_reduction() {
  std::vector<std::size_t> sel_ks;
  for (std::size_t k = 5; k < kN; k += 5) sel_ks.push_back(k);
  const std::vector<std::size_t> ks{100, 150, 190};

  ExperimentSpec burr;
  burr.distribution = DistributionSpec::burr(1, 2);
  burr.n = kN;
  burr.replications = kReps;
  burr.base_seed = kSeed;
  burr.ks = ks;
  burr.selection_ks = sel_ks;
  burr.methods = {fixed(Method::pareto_ml), fixed(Method::ep_plus, -0.5), fixed(Method::gpd_ml)};
  ExperimentMethod ep_sel;
  ep_sel.config.method = Method::ep;
  ep_sel.candidates = default_grid(Method::ep, kN);
  ep_sel.label = "Ep(min-variance)";
  burr.methods.push_back(ep_sel);
  const auto b = run_experiment(burr);

  ExperimentSpec fr = burr;
  fr.distribution = DistributionSpec::frechet(2);
  fr.methods = {fixed(Method::pareto_ml), fixed(Method::ep_plus, -1.0), fixed(Method::gpd_ml),
                fixed(Method::ep, {}, -2.0)};
  const auto f = run_experiment(fr);

  bool ok = true;
  std::string detail = "Burr:";
  for (std::size_t k : ks) {
    ok = not_worse(cell(b, "Ep+(rho=-0.5)", k), cell(b, "ParetoML", k), detail) && ok;
    ok = not_worse(cell(b, "Ep(min-variance)", k), cell(b, "GpdML", k), detail) && ok;
  }
  detail += " Frechet:";
  for (std::size_t k : ks) {
    ok = not_worse(cell(f, "Ep+(rho=-1)", k), cell(f, "ParetoML", k), detail) && ok;
    ok = not_worse(cell(f, "Ep(rho_tilde=-2)", k), cell(f, "GpdML", k), detail) && ok;
  }
  report(4, "bias reduction, Burr and Frechet", ok, detail);
}

void negative_xi() {
  bool ok = true;
  std::string detail;
  for (const auto& d : {DistributionSpec::reversed_burr(5, 1), DistributionSpec::ev_weibull(4)}) {
    ExperimentSpec spec;
    spec.distribution = d;
    spec.n = kN;
    spec.replications = kReps;
    spec.base_seed = kSeed;
    spec.ks = {150};
    spec.methods = {fixed(Method::gpd_ml), fixed(Method::ep, {}, -1.0)};
    const auto cs = run_experiment(spec);
    detail += fmt(" xi=%.2f:", d.true_xi());
    ok = not_worse(cell(cs, "Ep(rho_tilde=-1)", 150), cell(cs, "GpdML", 150), detail) && ok;
  }
  report(5, "negative xi", ok, detail);
}

void tail_metric() {
  const auto d = DistributionSpec::burr(1, 2);
  const double p = 0.003;
  const double c = tail_anchor(d, p);
  const std::size_t k = 150;
  MethodConfig hill_cfg, ep_cfg;
  hill_cfg.method = Method::pareto_ml;
  ep_cfg.method = Method::ep_plus;
  ep_cfg.rho = -0.5;
  std::vector<double> a_hill, a_ep;
  for (std::size_t r = 0; r < kReps; ++r) {
    const Sample s(sample(d, kN, kSeed ^ r));
    const auto fh = fit_at_k(s, hill_cfg, k);
    const auto fe = fit_at_k(s, ep_cfg, k);
    if (!fh.converged || !fe.converged || c < fh.threshold) continue;
    auto metric = [&](const FitResult& f) {
      const double ph = tail_prob(f, c, kN).value;
      return ph > 0.0 ? std::min(std::abs(std::log(p / ph)), kLogRatioCap) : kLogRatioCap;
    };
    a_hill.push_back(metric(fh));
    a_ep.push_back(metric(fe));
  }
  auto mean_se = [](const std::vector<double>& v) {
    double m = 0.0, s2 = 0.0;
    for (double x : v) m += x;
    m /= v.size();
    for (double x : v) s2 += (x - m) * (x - m);
    return std::pair{m, std::sqrt(s2 / (v.size() - 1) / v.size())};
  };
  const auto [mh, sh] = mean_se(a_hill);
  const auto [me, se] = mean_se(a_ep);
  const double margin = 3.0 * std::hypot(sh, se);
  report(6, "tail-probability metric", me < mh + margin && !a_ep.empty(),
         fmt("mean |log(p/p_hat)| at k=150, p=0.003: Ep+ %.4f vs ParetoML %.4f (3se %.4f, %zu reps%s)", me, mh,
             margin, a_ep.size(), me < mh ? "" : ", within margin only"));
}

void ci_coverage() {
  const auto d = DistributionSpec::burr(1, 2);
  MethodConfig cfg;
  cfg.method = Method::ep_plus;
  cfg.rho = -0.5;
  std::size_t used = 0, covered = 0;
  for (std::size_t r = 0; r < kReps; ++r) {
    const Sample s(sample(d, kN, kSeed ^ r));
    const auto f = fit_at_k(s, cfg, 100);
    if (!f.converged) continue;
    const auto ci = ci_xi(f, 0.95);
    ++used;
    if (ci.lower <= 0.5 && 0.5 <= ci.upper) ++covered;
  }
  const double cov = used ? static_cast<double>(covered) / used : 0.0;
  report(7, "CI coverage", cov >= 0.85, fmt("95%% intervals cover xi=0.5 in %.3f of %zu fits (need >= 0.85)", cov, used));
}

// ---------------------------------------------------------------------------
// Grid-search oracle with its own likelihood code.

double oracle_b_gpd(double xi0, double rt, double u) {
  const double s = xi0 + rt;
  return std::pow(u, -rt) * (1.0 - rt) / (rt * s) + std::pow(u, xi0) * (1.0 + xi0) / (xi0 * s) - 1.0 / (xi0 * rt);
}

double oracle_b_pareto(double rho, double u) { return (1.0 - rho) * std::pow(u, -rho) - 1.0; }

double oracle_ll_gpd(const std::vector<double>& y, double xi, double sigma, double delta, double xi0, double rt) {
  double ll = 0.0;
  for (double v : y) {
    const double z = 1.0 + xi * v / sigma;
    if (z <= 0.0) return -std::numeric_limits<double>::infinity();
    const double h = std::pow(z, -1.0 / xi);
    const double w = 1.0 + delta * oracle_b_gpd(xi0, rt, h);
    if (w <= 0.0) return -std::numeric_limits<double>::infinity();
    ll += std::log(w) - std::log(sigma) - (1.0 + 1.0 / xi) * std::log(z);
  }
  return ll;
}

double oracle_ll_pareto(const std::vector<double>& y, double xi, double delta, double rho) {
  double ll = 0.0;
  for (double v : y) {
    const double w = 1.0 + delta * oracle_b_pareto(rho, std::pow(v, -1.0 / xi));
    if (w <= 0.0) return -std::numeric_limits<double>::infinity();
    ll += std::log(w) - std::log(xi) - (1.0 + 1.0 / xi) * std::log(v);
  }
  return ll;
}

struct Box {
  std::vector<double> lo, hi;
  std::vector<int> points;
};

using GridFn = std::function<double(const std::vector<double>&)>;

// Evaluates f on every point of the box; returns (value, point) pairs.
std::vector<std::pair<double, std::vector<double>>> scan(const GridFn& f, const Box& box) {
  const std::size_t dim = box.lo.size();
  std::vector<std::pair<double, std::vector<double>>> out;
  std::vector<int> idx(dim, 0);
  std::vector<double> x(dim);
  while (true) {
    for (std::size_t i = 0; i < dim; ++i)
      x[i] = box.points[i] == 1 ? box.lo[i] : box.lo[i] + idx[i] * (box.hi[i] - box.lo[i]) / (box.points[i] - 1);
    out.emplace_back(f(x), x);
    std::size_t i = 0;
    while (i < dim && ++idx[i] == box.points[i]) idx[i++] = 0;
    if (i == dim) break;
  }
  return out;
}

// Exhaustive grid over the box. The best well-separated grid points seed
// local refinements: a window of +-2 cells is rescanned at 1/5 the spacing,
// and recentred without shrinking while the best point sits on an inner
// edge of the window. The best refined point wins.
std::pair<std::vector<double>, double> grid_oracle(const GridFn& f, const Box& box, int stages, int seeds) {
  const std::size_t dim = box.lo.size();
  std::vector<double> step0(dim);
  for (std::size_t i = 0; i < dim; ++i) step0[i] = (box.hi[i] - box.lo[i]) / (box.points[i] - 1);
  auto coarse = scan(f, box);
  std::sort(coarse.begin(), coarse.end(), [](const auto& a, const auto& b) { return a.first > b.first; });

  std::vector<std::vector<double>> starts;
  for (const auto& [v, x] : coarse) {
    if (!std::isfinite(v) || static_cast<int>(starts.size()) == seeds) break;
    const bool distinct = std::all_of(starts.begin(), starts.end(), [&](const auto& s) {
      for (std::size_t i = 0; i < dim; ++i)
        if (std::abs(s[i] - x[i]) > 3.5 * step0[i]) return true;
      return false;
    });
    if (distinct) starts.push_back(x);
  }

  std::vector<double> best;
  double best_v = -std::numeric_limits<double>::infinity();
  for (const auto& start : starts) {
    std::vector<double> centre = start, step = step0;
    double v_here = f(centre);
    for (int stage = 0, moves = 0; stage < stages && moves < 200;) {
      Box w{std::vector<double>(dim), std::vector<double>(dim), std::vector<int>(dim, 21)};
      for (std::size_t i = 0; i < dim; ++i) {
        w.lo[i] = std::max(box.lo[i], centre[i] - 2.0 * step[i]);
        w.hi[i] = std::min(box.hi[i], centre[i] + 2.0 * step[i]);
      }
      for (const auto& [v, x] : scan(f, w))
        if (v > v_here) {
          v_here = v;
          centre = x;
        }
      bool on_edge = false;
      for (std::size_t i = 0; i < dim; ++i) {
        const double tol = 1e-9 * step[i];
        if ((centre[i] - w.lo[i] < tol && w.lo[i] > box.lo[i]) || (w.hi[i] - centre[i] < tol && w.hi[i] < box.hi[i]))
          on_edge = true;
      }
      if (on_edge) {
        ++moves;
        continue;
      }
      for (auto& s : step) s /= 5.0;
      ++stage;
    }
    if (v_here > best_v) {
      best_v = v_here;
      best = centre;
    }
  }
  return {best, best_v};
}

void oracle_equivalence() {
  const std::size_t k = 50;
  double worst_ll = 0.0, worst_xi = 0.0;
  int instances = 0;
  for (std::uint64_t r = 0; r < 10; ++r) {
    const auto d = r % 2 ? DistributionSpec::frechet(2) : DistributionSpec::burr(1, 2);
    const Sample s(sample(d, kN, kSeed + 100 + r));

    // GPD track: (xi, log sigma, delta).
    {
      const auto ex = exceedances(s, k, ExceedanceMode::difference);
      const auto ml = fit_gpd_ml(ex);
      const double xi0 = ml.xi, rt = -1.0;
      const auto bias = BiasFunction::gpd(xi0, rt);
      const auto fit = fit_extended_gpd(ex, bias);
      const double dlo = std::max(bias.delta_min(), -20.0), dhi = std::min(bias.delta_max(), 20.0);
      const double ls0 = std::log(*ml.sigma);
      auto f = [&](const std::vector<double>& x) {
        if (x[0] < kXiMin || x[0] >= kXiMax) return -std::numeric_limits<double>::infinity();
        return oracle_ll_gpd(ex.values, x[0], std::exp(x[1]), x[2], xi0, rt);
      };
      const auto [best, v] = grid_oracle(f, {{kXiMin, ls0 - 2.0, dlo}, {2.5, ls0 + 2.0, dhi}, {60, 41, 81}}, 9, 6);
      const double ll_fit = oracle_ll_gpd(ex.values, fit.xi, *fit.sigma, *fit.delta, xi0, rt);
      std::fprintf(stderr, "oracle gpd r=%llu: fit (%.6f, %.6f, %.6f) ll %.8f [own %.8f]; grid (%.6f, %.6f, %.6f) ll %.8f\n",
                   static_cast<unsigned long long>(r), fit.xi, *fit.sigma, *fit.delta, fit.loglik, ll_fit, best[0],
                   std::exp(best[1]), best[2], v);
      worst_ll = std::max({worst_ll, std::abs(ll_fit - v), std::abs(fit.loglik - v)});
      worst_xi = std::max(worst_xi, std::abs(fit.xi - best[0]));
      ++instances;
    }
    // Pareto track: (xi, delta).
    {
      const auto ex = exceedances(s, k, ExceedanceMode::ratio);
      const double rho = -0.5;
      const auto bias = BiasFunction::pareto(rho);
      const auto fit = fit_extended_pareto(ex, bias);
      auto f = [&](const std::vector<double>& x) {
        if (x[0] <= 0.0) return -std::numeric_limits<double>::infinity();
        return oracle_ll_pareto(ex.values, x[0], x[1], rho);
      };
      const auto [best, v] =
          grid_oracle(f, {{0.02, std::max(bias.delta_min(), -20.0)}, {4.0, std::min(bias.delta_max(), 20.0)}, {200, 201}}, 10, 6);
      const double ll_fit = oracle_ll_pareto(ex.values, fit.xi, *fit.delta, rho);
      std::fprintf(stderr, "oracle pareto r=%llu: fit (%.6f, %.6f) ll %.8f [own %.8f]; grid (%.6f, %.6f) ll %.8f\n",
                   static_cast<unsigned long long>(r), fit.xi, *fit.delta, fit.loglik, ll_fit, best[0], best[1], v);
      worst_ll = std::max({worst_ll, std::abs(ll_fit - v), std::abs(fit.loglik - v)});
      worst_xi = std::max(worst_xi, std::abs(fit.xi - best[0]));
      ++instances;
    }
  }
  report(8, "oracle equivalence", worst_ll <= 1e-4 && worst_xi <= 1e-3,
         fmt("%d instances at k=50: max |loglik diff| %.2e (tol 1e-4), max |xi diff| %.2e (tol 1e-3)", instances,
             worst_ll, worst_xi));
}

// ---------------------------------------------------------------------------

double simpson01(const std::function<double(double)>& g) {
  // u = t^4 flattens integrable endpoint singularities.
  const int panels = 10000;
  const double h = 1.0 / panels;
  auto f = [&](double t) { return t <= 0.0 ? 0.0 : 4.0 * t * t * t * g(t * t * t * t); };
  double s = f(0.0) + f(1.0);
  for (int i = 1; i < panels; ++i) s += (i % 2 ? 4.0 : 2.0) * f(i * h);
  return s * h / 3.0;
}

void invariant_suites() {
  std::vector<std::string> broken;
  const std::vector<BiasFunction> kinds{BiasFunction::pareto(-0.5), BiasFunction::pareto(-2.0),
                                        BiasFunction::gpd(0.5, -1.0), BiasFunction::gpd(-0.2, -0.7),
                                        BiasFunction::gpd(0.0, -1.0), BiasFunction::gpd(1.3, -1.8),
                                        BiasFunction::bernstein(BernsteinCdf({0.0, 0.1, 0.5, 0.6, 1.0}))};
  for (const auto& b : kinds) {
    const double ib = simpson01([&](double u) { return b.b(u); });
    const double iB = simpson01([&](double u) { return b.B(u); });
    const double ilog = simpson01([&](double u) { return -std::log(u) * b.b(u); });
    const double ib2 = simpson01([&](double u) { return b.b(u) * b.b(u); });
    if (std::abs(ib) > 1e-8) broken.push_back("int b (" + b.name() + ")");
    if (std::abs(iB - ilog) > 1e-6) broken.push_back("integration by parts (" + b.name() + ")");
    if (iB * iB > ib2 + 1e-10) broken.push_back("Cauchy-Schwarz (" + b.name() + ")");
  }
  for (std::size_t m : {1u, 5u, 50u, 500u}) {
    const auto id = BernsteinCdf::identity(m);
    for (int i = 0; i <= 100; ++i)
      if (std::abs(eval_cdf(id, i / 100.0) - i / 100.0) > 1e-12) {
        broken.push_back("linear reproduction m=" + std::to_string(m));
        break;
      }
  }
  const BernsteinCdf g({0.0, 0.05, 0.3, 0.35, 0.8, 0.9, 1.0});
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> unif(1e-3, 1.0 - 1e-3);
  for (int i = 0; i < 100; ++i) {
    const double u = unif(gen), h = 1e-5;
    if (std::abs(eval_pdf(g, u) - (eval_cdf(g, u + h) - eval_cdf(g, u - h)) / (2 * h)) > 1e-6) {
      broken.push_back("pdf/cdf finite differences");
      break;
    }
  }
  const auto y = sample(DistributionSpec::gpd(0.3, 1.0), 200, 9);
  std::vector<double> ratios;
  for (double v : y) ratios.push_back(1.0 + v);
  const auto eb = BiasFunction::gpd(0.3, -1.0);
  const auto pb = BiasFunction::pareto(-0.7);
  double worst_grad = 0.0;
  for (int i = 0; i < 20; ++i) {
    const double xi = 0.1 + unif(gen), ls = unif(gen) - 0.5, dl = 0.4 * (unif(gen) - 0.5), h = 1e-6;
    const double sg = std::exp(ls);
    const auto a = gpd_loglik_gradient({xi, sg}, y);
    const double fa = (gpd_loglik({xi + h, sg}, y) - gpd_loglik({xi - h, sg}, y)) / (2 * h);
    const auto e = extended_gpd_gradient(xi, sg, dl, eb, y);
    const double fe = (extended_gpd_loglik(xi, sg, dl + h, eb, y) - extended_gpd_loglik(xi, sg, dl - h, eb, y)) / (2 * h);
    const double fe0 = (extended_gpd_loglik(xi + h, sg, dl, eb, y) - extended_gpd_loglik(xi - h, sg, dl, eb, y)) / (2 * h);
    const auto p = extended_pareto_gradient(xi, dl, pb, ratios);
    const double fp = (extended_pareto_loglik(xi + h, dl, pb, ratios) - extended_pareto_loglik(xi - h, dl, pb, ratios)) / (2 * h);
    const auto t = transform_loglik_gradient(y, xi, sg, g);
    const double ft = (transform_loglik(y, xi + h, sg, g) - transform_loglik(y, xi - h, sg, g)) / (2 * h);
    for (auto [an, fd] : {std::pair{a[0], fa}, {e[2], fe}, {e[0], fe0}, {p[0], fp}, {t[0], ft}})
      worst_grad = std::max(worst_grad, std::abs(an - fd) / std::max(1.0, std::abs(fd)));
  }
  if (worst_grad > 1e-5) broken.push_back("likelihood gradients");
  std::string detail = broken.empty() ? "all hold" : "broken:";
  for (const auto& b : broken) detail += " " + b + ";";
  detail += fmt(" (max relative gradient error %.1e)", worst_grad);
  report(9, "invariant suites", broken.empty(), detail);
}

}  // namespace

int main(int argc, char** argv) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<std::function<void()>> criteria{variance_formulas, functional_anchors, reductions,
                                                    bias_reduction,    negative_xi,        tail_metric,
                                                    ci_coverage,       oracle_equivalence, invariant_suites};
  // Optional arguments pick criteria by number; none runs all.
  std::vector<bool> run(criteria.size(), argc < 2);
  for (int a = 1; a < argc; ++a) {
    const auto id = static_cast<std::size_t>(std::atoi(argv[a]));
    if (id >= 1 && id <= criteria.size()) run[id - 1] = true;
  }
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!run[i]) continue;
    try {
      criteria[i]();
    } catch (const std::exception& e) {
      report(static_cast<int>(i + 1), "criterion", false, std::string("threw: ") + e.what());
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::fprintf(stderr, "acceptance finished in %.0f s, %d failed\n", secs, failures);
  return failures;
}
