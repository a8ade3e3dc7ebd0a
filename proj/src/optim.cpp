#include "gmmssl/optim.hpp"

#include <cmath>

#include "gmmssl/errors.hpp"

namespace gmmssl {

OptimResult bfgs_minimize(const std::function<double(const Vector&, Vector*)>& fg,
                          Vector x0, const OptimOptions& opts) {
  const auto d = x0.size();
  OptimResult res;
  res.x = x0;

  Vector g(d);
  double f = fg(x0, &g);
  res.evals = 1;
  if (!std::isfinite(f)) throw Error("objective is not finite at the starting point");
  res.f = f;

  Matrix h = Matrix::Identity(d, d);  // inverse Hessian approximation
  Vector x = std::move(x0);
  constexpr double kArmijo = 1e-4;

  while (res.iters < opts.max_iters && res.evals < opts.max_evals) {
    if (g.cwiseAbs().maxCoeff() <= opts.grad_tol * (1.0 + std::abs(f))) {
      res.converged = true;
      break;
    }

    Vector dir = -(h * g);
    double gd = g.dot(dir);
    if (!(gd < 0.0)) {  // curvature information went bad, fall back to steepest descent
      h.setIdentity();
      dir = -g;
      gd = g.dot(dir);
      if (!(gd < 0.0)) {
        res.converged = true;
        break;
      }
    }

    double t = 1.0;
    double f_new = f;
    bool accepted = false;
    while (res.evals < opts.max_evals) {
      f_new = fg(x + t * dir, nullptr);
      ++res.evals;
      if (std::isfinite(f_new) && f_new <= f + kArmijo * t * gd) {
        accepted = true;
        break;
      }
      t *= 0.5;
      if (t < 1e-20) break;
    }
    if (!accepted) break;

    Vector x_new = x + t * dir;
    if (res.evals >= opts.max_evals) {
      x = std::move(x_new);
      f = f_new;
      break;
    }
    Vector g_new(d);
    f_new = fg(x_new, &g_new);
    ++res.evals;

    const Vector s = t * dir;
    const Vector yv = g_new - g;
    const double sy = s.dot(yv);
    if (sy > 1e-10 * s.norm() * yv.norm()) {
      const Vector hy = h * yv;
      const double yhy = yv.dot(hy);
      h.noalias() += ((sy + yhy) / (sy * sy)) * (s * s.transpose());
      h.noalias() -= (hy * s.transpose() + s * hy.transpose()) / sy;
    }  // otherwise skip the update and keep the current curvature model

    x = std::move(x_new);
    f = f_new;
    g = std::move(g_new);
    ++res.iters;
  }

  res.x = std::move(x);
  res.f = f;
  return res;
}

}  // namespace gmmssl
