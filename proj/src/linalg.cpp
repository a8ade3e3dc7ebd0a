#include "gmmssl/linalg.hpp"

#include <cmath>
#include <string>

#include "gmmssl/errors.hpp"

namespace gmmssl {

Matrix cholesky_with_jitter(const Matrix& sigma, int class_index) {
  const auto p = sigma.rows();
  if (!sigma.allFinite()) {
    throw Error("covariance for class " + std::to_string(class_index) +
                " has non-finite entries");
  }
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() == Eigen::Success) return llt.matrixL();

  const double mean_diag = sigma.diagonal().mean();
  if (!(mean_diag > 0.0)) {
    throw Error("covariance for class " + std::to_string(class_index) +
                " has non-positive diagonal");
  }
  for (double jitter = 1e-10 * mean_diag; jitter <= 1e-4 * mean_diag * (1.0 + 1e-12);
       jitter *= 10.0) {
    Matrix bumped = sigma + jitter * Matrix::Identity(p, p);
    llt.compute(bumped);
    if (llt.info() == Eigen::Success) return llt.matrixL();
  }
  throw Error("covariance for class " + std::to_string(class_index) +
              " is not positive definite (Cholesky failed even with jitter)");
}

double log_det_from_cholesky(const Matrix& chol_lower) {
  return 2.0 * chol_lower.diagonal().array().log().sum();
}

double forward_solve_squared(const Matrix& chol_lower, const double* y,
                             const double* mu, double* u) {
  const auto p = chol_lower.rows();
  double quad = 0.0;
  for (Eigen::Index r = 0; r < p; ++r) {
    double s = y[r] - mu[r];
    for (Eigen::Index c = 0; c < r; ++c) s -= chol_lower(r, c) * u[c];
    u[r] = s / chol_lower(r, r);
    quad += u[r] * u[r];
  }
  return quad;
}

}  // namespace gmmssl
