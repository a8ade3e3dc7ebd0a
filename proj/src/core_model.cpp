#include "gmmssl/core_model.hpp"

#include <cmath>

#include "gmmssl/errors.hpp"

namespace gmmssl {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
}

MixtureEval::MixtureEval(const GmmParams& theta)
    : g_(theta.g), p_(theta.p), n_chol_(theta.n_cov()) {
  mu_.resize(g_, p_);
  for (int i = 0; i < g_; ++i) mu_.row(i) = theta.mu[i].transpose();
  chol_.reserve(n_chol_);
  log_norm_.reserve(n_chol_);
  for (int k = 0; k < n_chol_; ++k) {
    chol_.push_back(cholesky_with_jitter(theta.sigma[k], k + 1));
    log_norm_.push_back(-0.5 * p_ * kLog2Pi - 0.5 * log_det_from_cholesky(chol_[k]));
  }
  log_pi_.resize(g_);
  for (int i = 0; i < g_; ++i) log_pi_[i] = std::log(theta.pi[i]);
}

void MixtureEval::class_logweights(const double* y, double* a, double* u) const {
  for (int i = 0; i < g_; ++i) {
    const double quad = forward_solve_squared(chol(i), y, mu_.row(i).data(), u);
    a[i] = log_pi_[i] + log_norm(i) - 0.5 * quad;
  }
}

MixtureEval::RowResult MixtureEval::posterior_row(const double* y, double* tau,
                                                  double* a, double* u) const {
  class_logweights(y, a, u);
  int imax = 0;
  for (int i = 1; i < g_; ++i) {
    if (a[i] > a[imax]) imax = i;
  }
  const double amax = a[imax];
  double s = 0.0;
  for (int i = 0; i < g_; ++i) {
    if (i != imax) s += std::exp(a[i] - amax);
  }
  // log1p keeps the dominant class accurate: a[imax] - log_mix would cancel
  // to rounding noise once the row is nearly deterministic, and the entropy
  // (often ~exp(-gap)) would inherit that noise instead of its true scale
  const double l1p = std::log1p(s);
  const double log_mix = amax + l1p;
  double ent = 0.0;
  for (int i = 0; i < g_; ++i) {
    const double lt = i == imax ? -l1p : (a[i] - amax) - l1p;
    const double t = std::exp(lt);
    tau[i] = t;
    ent -= t * lt;  // exp(lt)*lt -> 0 as lt -> -inf, so no 0*inf here
  }
  return {log_mix, ent};
}

double MixtureEval::log_density(int cls, const double* y, double* u) const {
  const double quad = forward_solve_squared(chol(cls), y, mu_.row(cls).data(), u);
  return log_norm(cls) - 0.5 * quad;
}

int MixtureEval::classify_row(const double* y, double* a, double* u) const {
  class_logweights(y, a, u);
  int best = 0;
  for (int i = 1; i < g_; ++i) {
    if (a[i] > a[best]) best = i;
  }
  return best + 1;
}

double log_gaussian_pdf(const Vector& y, const Vector& mu, const Matrix& sigma) {
  if (y.size() != mu.size() || sigma.rows() != y.size() || sigma.cols() != y.size()) {
    throw Error("log_gaussian_pdf: dimension mismatch");
  }
  const Matrix L = cholesky_with_jitter(sigma, 1);
  Vector u(y.size());
  const double quad = forward_solve_squared(L, y.data(), mu.data(), u.data());
  return -0.5 * y.size() * kLog2Pi - 0.5 * log_det_from_cholesky(L) - 0.5 * quad;
}

double mixture_logpdf(const Vector& y, const GmmParams& theta) {
  MixtureEval ev(theta);
  Vector a(theta.g), u(theta.p), tau(theta.g);
  return ev.posterior_row(y.data(), tau.data(), a.data(), u.data()).log_mix;
}

Matrix posterior(const RowMatrix& y, const GmmParams& theta) {
  MixtureEval ev(theta);
  Matrix out(y.rows(), theta.g);
  Vector a(theta.g), u(theta.p), tau(theta.g);
  for (Eigen::Index j = 0; j < y.rows(); ++j) {
    ev.posterior_row(y.row(j).data(), tau.data(), a.data(), u.data());
    out.row(j) = tau.transpose();
  }
  return out;
}

Vector posterior_point(const Vector& y, const GmmParams& theta) {
  MixtureEval ev(theta);
  Vector a(theta.g), u(theta.p), tau(theta.g);
  ev.posterior_row(y.data(), tau.data(), a.data(), u.data());
  return tau;
}

double entropy(const Vector& tau) {
  double e = 0.0;
  for (Eigen::Index i = 0; i < tau.size(); ++i) {
    if (tau[i] > 0.0) e -= tau[i] * std::log(tau[i]);
  }
  return e;
}

Vector posterior_entropy(const RowMatrix& y, const GmmParams& theta) {
  MixtureEval ev(theta);
  Vector out(y.rows());
  Vector a(theta.g), u(theta.p), tau(theta.g);
  for (Eigen::Index j = 0; j < y.rows(); ++j) {
    out[j] = ev.posterior_row(y.row(j).data(), tau.data(), a.data(), u.data()).entropy;
  }
  return out;
}

int bayes_classify_point(const Vector& y, const GmmParams& theta) {
  MixtureEval ev(theta);
  Vector a(theta.g), u(theta.p);
  return ev.classify_row(y.data(), a.data(), u.data());
}

std::vector<int> bayes_classify(const RowMatrix& y, const GmmParams& theta) {
  MixtureEval ev(theta);
  std::vector<int> out(y.rows());
  Vector a(theta.g), u(theta.p);
  for (Eigen::Index j = 0; j < y.rows(); ++j) {
    out[j] = ev.classify_row(y.row(j).data(), a.data(), u.data());
  }
  return out;
}

}  // namespace gmmssl
