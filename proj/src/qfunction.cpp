#include "gmmssl/qfunction.hpp"

#include <cmath>

#include "gmmssl/core_model.hpp"
#include "gmmssl/errors.hpp"
#include "gmmssl/scalar_math.hpp"

namespace gmmssl {

QFunction::QFunction(const PartiallyLabeledSample& sample, Matrix responsibilities,
                     MissingnessParams xi, EntropyCovariate mode,
                     CovarianceMode cov_mode)
    : sample_(sample),
      resp_(std::move(responsibilities)),
      xi_(xi),
      mode_(mode),
      tf_(static_cast<int>(resp_.cols()), sample.p(), cov_mode) {
  if (resp_.rows() != sample.n()) {
    throw Error("responsibilities must have one row per observation");
  }
  for (Eigen::Index j = 0; j < resp_.rows(); ++j) {
    if (std::abs(resp_.row(j).sum() - 1.0) > 1e-8 || resp_.row(j).minCoeff() < -1e-12) {
      throw Error("responsibility row " + std::to_string(j + 1) +
                  " is not a probability vector");
    }
  }
}

double QFunction::value(const GmmParams& theta) const { return eval(theta, nullptr); }

double QFunction::value_unconstrained(const Vector& v) const {
  return eval(tf_.unpack(v), nullptr);
}

double QFunction::value_and_grad(const Vector& v, Vector& grad) const {
  grad.resize(tf_.dim());
  return eval(tf_.unpack(v), &grad);
}

double QFunction::eval(const GmmParams& theta, Vector* grad) const {
  const int g = tf_.g, p = tf_.p, n = sample_.n();
  if (theta.g != g || theta.p != p || theta.cov_mode != tf_.cov_mode) {
    throw Error("q function: parameter shape mismatch");
  }
  MixtureEval ev(theta);

  // per-class accumulators in whitened coordinates u = L^-1 (y - mu)
  std::vector<Vector> vsum(g, Vector::Zero(p));
  std::vector<Matrix> msum(g, Matrix::Zero(p, p));
  Vector wsum = Vector::Zero(g);    // sum_j omega_ij
  double wtot = 0.0;                // sum_ij omega_ij
  RowMatrix u_rows(g, p);           // whitened residual per class, current row
  Vector a(g), logtau(g), tau(g);

  const bool log_mode = mode_ == EntropyCovariate::log_entropy;
  double q_val = 0.0;

  for (int j = 0; j < n; ++j) {
    const double* y = sample_.y.row(j).data();
    for (int i = 0; i < g; ++i) {
      const double quad = forward_solve_squared(ev.chol(i), y, ev.mu_row(i),
                                                u_rows.row(i).data());
      a[i] = ev.log_pi(i) + ev.log_norm(i) - 0.5 * quad;
    }
    int imax = 0;
    for (int i = 1; i < g; ++i) {
      if (a[i] > a[imax]) imax = i;
    }
    double s_exp = 0.0;
    for (int i = 0; i < g; ++i) {
      if (i != imax) s_exp += std::exp(a[i] - a[imax]);
    }
    // a[imax] - lse cancels to noise on near-deterministic rows; log1p keeps
    // the dominant log posterior, and with it the entropy, at its true scale
    const double l1p = std::log1p(s_exp);
    double ent = 0.0;
    for (int i = 0; i < g; ++i) {
      logtau[i] = i == imax ? -l1p : (a[i] - a[imax]) - l1p;
      tau[i] = std::exp(logtau[i]);
      ent -= tau[i] * logtau[i];
    }

    const double m = sample_.is_labeled(j) ? 0.0 : 1.0;
    const double eta = xi_.xi0 + xi_.xi1 * entropy_covariate(ent, mode_);
    q_val += m * eta - softplus(eta);
    for (int i = 0; i < g; ++i) q_val += resp_(j, i) * a[i];

    if (!grad) continue;

    // chain factor through the covariate; flat below the entropy floor
    const double dcov = log_mode ? (ent > kEntropyFloor ? 1.0 / ent : 0.0) : 1.0;
    const double k = (m - logistic(eta)) * xi_.xi1 * dcov;
    for (int i = 0; i < g; ++i) {
      const double s = -tau[i] * (logtau[i] + ent) * k;
      const double w = resp_(j, i) + s;
      wsum[i] += w;
      wtot += w;
      vsum[i].noalias() += w * u_rows.row(i).transpose();
      msum[i].noalias() += w * u_rows.row(i).transpose() * u_rows.row(i);
    }
  }

  if (!grad) return q_val;

  Vector& gr = *grad;
  gr.setZero();
  int at = 0;
  for (int i = 0; i < g - 1; ++i) gr[at++] = wsum[i] - theta.pi[i] * wtot;

  for (int i = 0; i < g; ++i) {
    gr.segment(at, p) =
        ev.chol(i).transpose().triangularView<Eigen::Upper>().solve(vsum[i]);
    at += p;
  }

  const int n_cov = tf_.n_cov();
  for (int k = 0; k < n_cov; ++k) {
    Matrix m_all = Matrix::Zero(p, p);
    double w_all = 0.0;
    if (n_cov == 1) {
      for (int i = 0; i < g; ++i) m_all += msum[i];
      w_all = wtot;
    } else {
      m_all = msum[k];
      w_all = wsum[k];
    }
    const Matrix& L = ev.chol(k);
    const Matrix gmat = L.transpose().triangularView<Eigen::Upper>().solve(m_all);
    for (int r = 0; r < p; ++r) {
      for (int c = 0; c < r; ++c) gr[at++] = gmat(r, c);
      // log-diagonal parameterization: d/d(log L_rr) = L_rr d/dL_rr
      gr[at++] = gmat(r, r) * L(r, r) - w_all;
    }
  }
  return q_val;
}

double q_function(const GmmParams& theta, const MissingnessParams& xi,
                  const Matrix& responsibilities, const PartiallyLabeledSample& sample,
                  EntropyCovariate mode) {
  return QFunction(sample, responsibilities, xi, mode, theta.cov_mode).value(theta);
}

}  // namespace gmmssl
