#pragma once

#include <Eigen/Dense>

namespace gmmssl {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
// sample matrices are row-major so a row is a contiguous observation
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Lower Cholesky factor of a symmetric positive definite matrix.  If the
// plain factorization fails, a diagonal jitter of 1e-10 * mean(diag) is
// added and escalated tenfold up to 1e-4 * mean(diag) before giving up.
// class_index (1-based) is only used in the error message.
Matrix cholesky_with_jitter(const Matrix& sigma, int class_index);

// log(det(Sigma)) from its lower Cholesky factor
double log_det_from_cholesky(const Matrix& chol_lower);

// u = L^-1 (y - mu) and the squared norm |u|^2, fused forward solve.
// y, mu point at p doubles; u receives p doubles.
double forward_solve_squared(const Matrix& chol_lower, const double* y,
                             const double* mu, double* u);

}  // namespace gmmssl
