#include "gmmssl/transform.hpp"

#include <cmath>

#include "gmmssl/errors.hpp"

namespace gmmssl {

Vector ThetaTransform::pack(const GmmParams& theta) const {
  if (theta.g != g || theta.p != p || theta.cov_mode != cov_mode) {
    throw Error("pack: parameter shape does not match the transform");
  }
  Vector v(dim());
  int at = 0;
  const double log_pi_g = std::log(theta.pi[g - 1]);
  for (int i = 0; i < g - 1; ++i) v[at++] = std::log(theta.pi[i]) - log_pi_g;
  for (int i = 0; i < g; ++i) {
    for (int r = 0; r < p; ++r) v[at++] = theta.mu[i][r];
  }
  for (int k = 0; k < n_cov(); ++k) {
    const Matrix L = cholesky_with_jitter(theta.sigma[k], k + 1);
    for (int r = 0; r < p; ++r) {
      for (int c = 0; c < r; ++c) v[at++] = L(r, c);
      v[at++] = std::log(L(r, r));
    }
  }
  return v;
}

GmmParams ThetaTransform::unpack(const Vector& v) const {
  if (v.size() != dim()) throw Error("unpack: vector has wrong length");
  int at = 0;

  Vector pi(g);
  double vmax = 0.0;  // the reference class carries v_g = 0
  for (int i = 0; i < g - 1; ++i) vmax = std::max(vmax, v[at + i]);
  double sum = std::exp(0.0 - vmax);
  pi[g - 1] = sum;
  for (int i = 0; i < g - 1; ++i) {
    pi[i] = std::exp(v[at + i] - vmax);
    sum += pi[i];
  }
  pi /= sum;
  at += g - 1;

  std::vector<Vector> mu(g);
  for (int i = 0; i < g; ++i) {
    mu[i] = v.segment(at, p);
    at += p;
  }

  std::vector<Matrix> sigma;
  sigma.reserve(n_cov());
  for (int k = 0; k < n_cov(); ++k) {
    Matrix L = Matrix::Zero(p, p);
    for (int r = 0; r < p; ++r) {
      for (int c = 0; c < r; ++c) L(r, c) = v[at++];
      L(r, r) = std::exp(v[at++]);
    }
    Matrix s = L * L.transpose();
    s = 0.5 * (s + s.transpose());  // exact symmetry against rounding
    sigma.push_back(std::move(s));
  }

  return GmmParams::make(std::move(pi), std::move(mu), std::move(sigma), cov_mode);
}

}  // namespace gmmssl
