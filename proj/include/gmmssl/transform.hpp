#pragma once

#include "gmmssl/params.hpp"

namespace gmmssl {

// Bijection between GmmParams and an unconstrained vector, laid out as
//   [ v_1..v_{g-1} | mu_1 .. mu_g | tril(L_1) .. ]
// where v_i = log(pi_i / pi_g), each covariance is represented by the lower
// triangle of its Cholesky factor in row-major order, and diagonal entries
// are stored as logs so any real vector maps to a valid parameter set.
struct ThetaTransform {
  int g = 0;
  int p = 0;
  CovarianceMode cov_mode = CovarianceMode::unequal;

  ThetaTransform() = default;
  ThetaTransform(int g_, int p_, CovarianceMode mode) : g(g_), p(p_), cov_mode(mode) {}
  explicit ThetaTransform(const GmmParams& theta)
      : g(theta.g), p(theta.p), cov_mode(theta.cov_mode) {}

  int n_cov() const { return cov_mode == CovarianceMode::common ? 1 : g; }
  int tril_size() const { return p * (p + 1) / 2; }
  int dim() const { return (g - 1) + g * p + n_cov() * tril_size(); }

  Vector pack(const GmmParams& theta) const;
  GmmParams unpack(const Vector& v) const;
};

}  // namespace gmmssl
