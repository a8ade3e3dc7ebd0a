#pragma once

#include <functional>

#include "gmmssl/linalg.hpp"

namespace gmmssl {

struct OptimOptions {
  int max_evals = 500;      // objective evaluations, with or without gradient
  int max_iters = 200;      // quasi-Newton steps
  double grad_tol = 1e-8;   // stop when |grad|_inf <= grad_tol * (1 + |f|)
};

struct OptimResult {
  Vector x;
  double f = 0.0;
  int evals = 0;
  int iters = 0;
  bool converged = false;  // gradient test met (budget exhaustion leaves it false)
};

// Minimizes f by BFGS with Armijo backtracking.  fg(x, g) returns f(x) and
// fills *g when g is non-null.  The line search only accepts descent, so the
// returned point is never worse than x0.  Non-finite objective values reject
// the trial step.
OptimResult bfgs_minimize(const std::function<double(const Vector&, Vector*)>& fg,
                          Vector x0, const OptimOptions& opts = {});

}  // namespace gmmssl
