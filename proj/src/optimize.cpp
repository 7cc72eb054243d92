#include "tailforge/optimize.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <limits>
#include <numeric>

namespace tailforge {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Vertex {
  std::vector<double> x;
  double f;
};

}  // namespace

OptimResult simplex_maximize(const Objective& f, std::vector<double> start,
                             std::span<const double> steps, const SimplexOptions& opts) {
  const std::size_t dim = start.size();
  OptimResult res;
  auto eval = [&](const std::vector<double>& x) {
    ++res.evaluations;
    const double v = f(x);
    return std::isnan(v) ? kNegInf : v;
  };

  std::vector<double> best = std::move(start);
  double best_f = eval(best);
  std::vector<double> step(steps.begin(), steps.end());

  for (int round = 0; round <= opts.restarts; ++round) {
    std::vector<Vertex> s;
    s.push_back({best, best_f});
    for (std::size_t i = 0; i < dim; ++i) {
      Vertex v{best, 0.0};
      v.x[i] += step[i];
      v.f = eval(v.x);
      if (v.f == kNegInf) {
        // try the opposite direction before giving up on this axis
        v.x[i] = best[i] - step[i];
        v.f = eval(v.x);
      }
      s.push_back(std::move(v));
    }

    bool done = false;
    while (res.evaluations < opts.max_evaluations) {
      std::sort(s.begin(), s.end(), [](const Vertex& a, const Vertex& b) { return a.f > b.f; });
      ++res.iterations;
      double diam = 0.0;
      for (std::size_t i = 1; i <= dim; ++i)
        for (std::size_t j = 0; j < dim; ++j) diam = std::max(diam, std::abs(s[i].x[j] - s[0].x[j]));
      const double spread = s[0].f - s[dim].f;
      if (s[dim].f > kNegInf && spread <= opts.ftol * std::max(1.0, std::abs(s[0].f)) && diam <= opts.xtol) {
        done = true;
        break;
      }
      if (diam <= 1e-15 * (1.0 + std::abs(s[0].x[0]))) {
        done = true;
        break;
      }

      std::vector<double> centroid(dim, 0.0);
      for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = 0; j < dim; ++j) centroid[j] += s[i].x[j] / static_cast<double>(dim);
      auto along = [&](double t) {
        std::vector<double> x(dim);
        for (std::size_t j = 0; j < dim; ++j) x[j] = centroid[j] + t * (s[dim].x[j] - centroid[j]);
        return x;
      };

      Vertex refl{along(-1.0), 0.0};
      refl.f = eval(refl.x);
      if (refl.f > s[0].f) {
        Vertex exp{along(-2.0), 0.0};
        exp.f = eval(exp.x);
        s[dim] = exp.f > refl.f ? std::move(exp) : std::move(refl);
        continue;
      }
      if (refl.f > s[dim - 1].f) {
        s[dim] = std::move(refl);
        continue;
      }
      const bool outside = refl.f > s[dim].f;
      Vertex con{along(outside ? -0.5 : 0.5), 0.0};
      con.f = eval(con.x);
      if (outside ? (con.f >= refl.f) : (con.f > s[dim].f)) {
        s[dim] = std::move(con);
        continue;
      }
      for (std::size_t i = 1; i <= dim; ++i) {
        for (std::size_t j = 0; j < dim; ++j) s[i].x[j] = s[0].x[j] + 0.5 * (s[i].x[j] - s[0].x[j]);
        s[i].f = eval(s[i].x);
      }
    }
    std::sort(s.begin(), s.end(), [](const Vertex& a, const Vertex& b) { return a.f > b.f; });
    if (s[0].f >= best_f) {
      best = s[0].x;
      best_f = s[0].f;
    }
    res.converged = done;
    if (res.evaluations >= opts.max_evaluations) break;
    // restart with a smaller simplex around the incumbent
    for (double& st : step) st *= 0.1;
  }
  res.x = std::move(best);
  res.value = best_f;
  return res;
}

std::vector<double> numeric_gradient(const Objective& f, std::span<const double> x, double rel_step) {
  std::vector<double> g(x.size());
  std::vector<double> xp(x.begin(), x.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double h = rel_step * std::max(1.0, std::abs(x[i]));
    const double xi = xp[i];
    xp[i] = xi + h;
    const double fp = f(xp);
    xp[i] = xi - h;
    const double fm = f(xp);
    xp[i] = xi;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

OptimResult newton_polish(const Objective& f, const Gradient& grad, std::vector<double> start,
                          const NewtonOptions& opts) {
  const std::size_t dim = start.size();
  OptimResult res;
  res.x = std::move(start);
  res.value = f(res.x);
  ++res.evaluations;
  if (!std::isfinite(res.value)) return res;

  for (int it = 0; it < opts.max_iterations; ++it) {
    res.iterations = it;
    std::vector<double> g = grad(res.x);
    Eigen::VectorXd gv = Eigen::Map<const Eigen::VectorXd>(g.data(), static_cast<Eigen::Index>(dim));
    if (!gv.allFinite()) break;
    if (gv.norm() < opts.gradient_tol) {
      res.converged = true;
      return res;
    }
    Eigen::MatrixXd h(dim, dim);
    std::vector<double> xp = res.x;
    bool ok = true;
    for (std::size_t i = 0; i < dim && ok; ++i) {
      const double step = opts.fd_step * std::max(1.0, std::abs(res.x[i]));
      xp[i] = res.x[i] + step;
      const double fp = f(xp);
      std::vector<double> gp = std::isfinite(fp) ? grad(xp) : std::vector<double>{};
      xp[i] = res.x[i] - step;
      const double fm = f(xp);
      std::vector<double> gm = std::isfinite(fm) ? grad(xp) : std::vector<double>{};
      xp[i] = res.x[i];
      if (!gp.empty() && !gm.empty()) {
        for (std::size_t j = 0; j < dim; ++j) h(j, i) = (gp[j] - gm[j]) / (2.0 * step);
      } else if (!gp.empty()) {
        for (std::size_t j = 0; j < dim; ++j) h(j, i) = (gp[j] - g[j]) / step;
      } else if (!gm.empty()) {
        for (std::size_t j = 0; j < dim; ++j) h(j, i) = (g[j] - gm[j]) / step;
      } else {
        ok = false;
      }
    }
    if (!ok || !h.allFinite()) break;
    const Eigen::MatrixXd neg_h = -0.5 * (h + h.transpose());

    // Where the model is not concave, shift the spectrum so the smallest
    // curvature is a fixed fraction of the largest; a shift that only just
    // reaches definiteness gives an unusably long step.
    const double scale = std::max(1e-12, neg_h.diagonal().cwiseAbs().maxCoeff());
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(neg_h);
    if (eig.info() != Eigen::Success) break;
    const double min_eig = eig.eigenvalues().minCoeff();
    const double lambda = min_eig > 1e-8 * scale ? 0.0 : 0.1 * scale - min_eig;
    const Eigen::LLT<Eigen::MatrixXd> llt(neg_h + lambda * Eigen::MatrixXd::Identity(dim, dim));
    if (llt.info() != Eigen::Success) break;
    const Eigen::VectorXd p = llt.solve(gv);
    if (p.size() == 0 || !p.allFinite()) break;

    double t = 1.0;
    bool moved = false;
    std::vector<double> xn(dim);
    for (int ls = 0; ls < 40; ++ls) {
      for (std::size_t j = 0; j < dim; ++j) xn[j] = res.x[j] + t * p[static_cast<Eigen::Index>(j)];
      const double fn = f(xn);
      ++res.evaluations;
      if (std::isfinite(fn) && fn >= res.value) {
        res.x = xn;
        res.value = fn;
        moved = true;
        break;
      }
      // Near the optimum the gain of a Newton step drops below the rounding
      // noise of f; accept a full step that is level within that noise and
      // shrinks the gradient.
      const double noise = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(res.value));
      if (ls == 0 && std::isfinite(fn) && fn >= res.value - noise) {
        const std::vector<double> gn = grad(xn);
        double nn = 0.0;
        for (double v : gn) nn += v * v;
        if (std::isfinite(nn) && std::sqrt(nn) < 0.5 * gv.norm()) {
          res.x = xn;
          res.value = std::max(res.value, fn);
          moved = true;
          break;
        }
      }
      t *= 0.5;
    }
    if (!moved) break;
  }
  std::vector<double> g = grad(res.x);
  double norm = 0.0;
  for (double v : g) norm += v * v;
  res.converged = std::sqrt(norm) < opts.gradient_tol;
  return res;
}

OptimResult brent_maximize(const std::function<double(double)>& f, double lo, double hi) {
  OptimResult res;
  std::uintmax_t iters = 500;
  auto neg = [&](double x) {
    ++res.evaluations;
    const double v = f(x);
    return std::isfinite(v) ? -v : std::numeric_limits<double>::max();
  };
  const auto [x, v] = boost::math::tools::brent_find_minima(neg, lo, hi, std::numeric_limits<double>::digits / 2, iters);
  res.x = {x};
  res.value = -v;
  res.iterations = static_cast<int>(iters);
  res.converged = iters < 500;
  return res;
}

}  // namespace tailforge
