#pragma once

#include <functional>
#include <span>
#include <vector>

namespace tailforge {

// Objectives are maximized; infeasible points report -infinity.
using Objective = std::function<double(std::span<const double>)>;
using Gradient = std::function<std::vector<double>(std::span<const double>)>;

struct OptimResult {
  std::vector<double> x;
  double value = 0.0;
  int evaluations = 0;
  int iterations = 0;
  bool converged = false;
};

struct SimplexOptions {
  double ftol = 1e-12;   // absolute spread of vertex values
  double xtol = 1e-9;    // simplex diameter (infinity norm)
  int max_evaluations = 4000;
  int restarts = 1;      // rebuild the simplex around the optimum this many times
};

// Nelder-Mead downhill simplex (reflection 1, expansion 2, contraction and
// shrink 0.5). The start must be feasible.
OptimResult simplex_maximize(const Objective& f, std::vector<double> start,
                             std::span<const double> steps, const SimplexOptions& opts = {});

struct NewtonOptions {
  double gradient_tol = 1e-8;
  int max_iterations = 50;
  double fd_step = 1e-5;  // relative step for the finite-difference Hessian
};

// Damped Newton ascent with a finite-difference Hessian of the supplied
// gradient and a backtracking line search that never decreases f.
OptimResult newton_polish(const Objective& f, const Gradient& grad, std::vector<double> start,
                          const NewtonOptions& opts = {});

// Central-difference gradient for objectives without an analytic one.
std::vector<double> numeric_gradient(const Objective& f, std::span<const double> x, double rel_step = 1e-6);

// Bounded scalar maximization (Brent), to near machine precision in x.
OptimResult brent_maximize(const std::function<double(double)>& f, double lo, double hi);

}  // namespace tailforge
