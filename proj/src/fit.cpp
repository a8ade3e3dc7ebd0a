#include "gmmssl/fit.hpp"

#include <algorithm>
#include <cmath>

#include "gmmssl/core_model.hpp"
#include "gmmssl/errors.hpp"
#include "gmmssl/likelihoods.hpp"
#include "gmmssl/optim.hpp"
#include "gmmssl/qfunction.hpp"
#include "gmmssl/transform.hpp"

namespace gmmssl {

const char* to_string(FitStatus status) {
  switch (status) {
    case FitStatus::converged_tol: return "converged";
    case FitStatus::converged_param: return "converged-singular";
    case FitStatus::iteration_limit: return "iteration-limit";
    case FitStatus::component_collapse: return "component-collapse";
    case FitStatus::failed: return "failed";
  }
  return "unknown";
}

const char* to_string(FitType type) {
  switch (type) {
    case FitType::com: return "com";
    case FitType::ign: return "ign";
    case FitType::full: return "full";
  }
  return "unknown";
}

void FitConfig::validate() const {
  if (iter_max < 1 || eval_max < 1) throw Error("iteration and evaluation limits must be positive");
  if (!(rel_tol > 0.0 && rel_tol < 1.0)) throw Error("rel_tol must be in (0, 1)");
  if (!(sing_tol > 0.0 && sing_tol < 1.0)) throw Error("sing_tol must be in (0, 1)");
}

namespace {

constexpr double kPiCollapse = 1e-8;

double stop_threshold(double loglik, double rel_tol) {
  return std::max(rel_tol * (std::abs(loglik) + rel_tol), 1e-12);
}

// weighted closed-form update shared by fit_complete and the EM M-step;
// covariance divisor is the class weight (pooled: the total weight)
GmmParams weighted_mle(const RowMatrix& y, const Matrix& resp, CovarianceMode mode) {
  const int n = static_cast<int>(y.rows());
  const int p = static_cast<int>(y.cols());
  const int g = static_cast<int>(resp.cols());

  const Vector ni = resp.colwise().sum();
  for (int i = 0; i < g; ++i) {
    if (!(ni[i] > 0.0)) {
      throw Error("class " + std::to_string(i + 1) + " has zero total responsibility");
    }
  }
  Vector pi = ni / static_cast<double>(n);

  const Matrix mu_mat = resp.transpose() * y;  // g x p
  std::vector<Vector> mu(g);
  for (int i = 0; i < g; ++i) mu[i] = mu_mat.row(i).transpose() / ni[i];

  std::vector<Matrix> scatter(g, Matrix::Zero(p, p));
  Vector d(p);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < g; ++i) {
      const double w = resp(j, i);
      if (w == 0.0) continue;
      d = y.row(j).transpose() - mu[i];
      scatter[i].noalias() += w * d * d.transpose();
    }
  }

  std::vector<Matrix> sigma;
  if (mode == CovarianceMode::common) {
    Matrix pooled = Matrix::Zero(p, p);
    for (int i = 0; i < g; ++i) pooled += scatter[i];
    sigma.push_back(pooled / static_cast<double>(n));
  } else {
    for (int i = 0; i < g; ++i) sigma.push_back(scatter[i] / ni[i]);
  }
  return GmmParams::make(std::move(pi), std::move(mu), std::move(sigma), mode);
}

Matrix indicator_responsibilities(const PartiallyLabeledSample& sample, int g) {
  Matrix resp = Matrix::Zero(sample.n(), g);
  for (int j = 0; j < sample.n(); ++j) resp(j, sample.label(j) - 1) = 1.0;
  return resp;
}

double param_change(const GmmParams& a, const GmmParams& b) {
  double c = 0.0;
  for (int i = 0; i < a.g; ++i) {
    c = std::max(c, std::abs(a.pi[i] - b.pi[i]));
    c = std::max(c, (a.mu[i] - b.mu[i]).cwiseAbs().maxCoeff());
  }
  for (size_t k = 0; k < a.sigma.size(); ++k) {
    c = std::max(c, (a.sigma[k] - b.sigma[k]).cwiseAbs().maxCoeff());
  }
  return c;
}

MissingnessParams intercept_only_xi(const PartiallyLabeledSample& sample) {
  const double n = sample.n();
  const double m_bar = (n - sample.n_labeled()) / n;
  if (m_bar <= 0.0) return {-30.0, 0.0};
  if (m_bar >= 1.0) return {30.0, 0.0};
  return {std::clamp(std::log(m_bar / (1.0 - m_bar)), -30.0, 30.0), 0.0};
}

}  // namespace

Matrix responsibilities(const PartiallyLabeledSample& sample, const GmmParams& theta) {
  sample.check_labels_within(theta.g);
  MixtureEval ev(theta);
  Matrix resp = Matrix::Zero(sample.n(), theta.g);
  Vector a(theta.g), u(theta.p), tau(theta.g);
  for (int j = 0; j < sample.n(); ++j) {
    if (sample.is_labeled(j)) {
      resp(j, sample.label(j) - 1) = 1.0;
    } else {
      ev.posterior_row(sample.y.row(j).data(), tau.data(), a.data(), u.data());
      resp.row(j) = tau.transpose();
    }
  }
  return resp;
}

FitReport fit_complete(const PartiallyLabeledSample& sample, const FitConfig& config,
                       int g) {
  config.validate();
  for (int j = 0; j < sample.n(); ++j) {
    if (!sample.is_labeled(j)) {
      throw Error("row " + std::to_string(j + 1) +
                  " has no label; use the ign or full fit for partially labeled data");
    }
  }
  const int g_eff = g > 0 ? g : sample.max_label();
  if (g_eff < 2) throw Error("need at least 2 classes");
  sample.check_labels_within(g_eff);

  std::vector<int> count(g_eff, 0);
  for (int j = 0; j < sample.n(); ++j) ++count[sample.label(j) - 1];
  for (int i = 0; i < g_eff; ++i) {
    if (count[i] == 0) throw Error("class " + std::to_string(i + 1) + " has no observations");
  }

  FitReport rep;
  rep.theta = weighted_mle(sample.y, indicator_responsibilities(sample, g_eff), config.ncov);
  const double ll = log_lik_classified(sample, rep.theta);
  rep.objective = -ll;
  rep.loglik_trace = {ll};
  rep.iterations = 1;
  rep.status = FitStatus::converged_tol;
  rep.converged = true;
  return rep;
}

FitReport fit_ignore(const PartiallyLabeledSample& sample, const GmmParams& init,
                     const FitConfig& config) {
  config.validate();
  init.validate();
  if (init.cov_mode != config.ncov) {
    throw Error("initial parameters use a different covariance mode than the config");
  }
  sample.check_labels_within(init.g);

  FitReport rep;
  rep.theta = init;
  double ll = log_lik_ignore(sample, rep.theta);
  rep.loglik_trace = {ll};
  rep.status = FitStatus::iteration_limit;

  for (int it = 1; it <= config.iter_max; ++it) {
    GmmParams next;
    try {
      next = weighted_mle(sample.y, responsibilities(sample, rep.theta), config.ncov);
    } catch (const Error& e) {
      rep.status = FitStatus::component_collapse;
      rep.message = e.what();
      break;
    }
    if (next.pi.minCoeff() < kPiCollapse) {
      rep.status = FitStatus::component_collapse;
      rep.message = "mixing proportion collapsed below 1e-8";
      break;
    }
    const double ll_new = log_lik_ignore(sample, next);
    rep.loglik_trace.push_back(ll_new);
    rep.iterations = it;
    const double change = param_change(next, rep.theta);
    rep.theta = std::move(next);
    const double gain = ll_new - ll;
    ll = ll_new;
    if (gain < stop_threshold(ll_new, config.rel_tol)) {
      rep.status = FitStatus::converged_tol;
      break;
    }
    if (change < config.sing_tol) {
      rep.status = FitStatus::converged_param;
      break;
    }
  }

  rep.objective = -ll;
  rep.converged = rep.status == FitStatus::converged_tol ||
                  rep.status == FitStatus::converged_param;
  return rep;
}

FitReport fit_full(const PartiallyLabeledSample& sample, const GmmParams& init_theta,
                   const MissingnessParams& init_xi, const FitConfig& config) {
  config.validate();
  init_theta.validate();
  if (init_theta.cov_mode != config.ncov) {
    throw Error("initial parameters use a different covariance mode than the config");
  }
  sample.check_labels_within(init_theta.g);

  FitReport rep;
  rep.theta = init_theta;
  const int n_lab = sample.n_labeled();
  if (n_lab == 0) rep.message = "no labeled rows; ";
  if (n_lab == sample.n()) rep.message = "no unlabeled rows; ";

  MissingnessParams xi = config.fix_xi1_zero ? intercept_only_xi(sample) : init_xi;
  if (config.fix_xi1_zero && (n_lab == 0 || n_lab == sample.n())) rep.xi_degenerate = true;

  std::vector<int> m(sample.n());
  for (int j = 0; j < sample.n(); ++j) m[j] = sample.is_labeled(j) ? 0 : 1;

  const ThetaTransform tf(init_theta.g, init_theta.p, config.ncov);
  double ll = log_lik_full(sample, {rep.theta, xi}, config.covariate);
  rep.loglik_trace = {ll};
  rep.status = FitStatus::iteration_limit;

  for (int it = 1; it <= config.iter_max; ++it) {
    const Matrix resp = responsibilities(sample, rep.theta);
    QFunction qf(sample, resp, xi, config.covariate, config.ncov);

    Vector v0;
    OptimResult opt;
    try {
      v0 = tf.pack(rep.theta);
      auto fg = [&qf](const Vector& v, Vector* grad) -> double {
        try {
          if (!grad) return -qf.value_unconstrained(v);
          Vector qg;
          const double q = qf.value_and_grad(v, qg);
          *grad = -qg;
          return -q;
        } catch (const Error&) {
          // invalid parameter point: reject the trial step
          if (grad) grad->setZero();
          return std::numeric_limits<double>::infinity();
        }
      };
      OptimOptions oo;
      oo.max_evals = config.eval_max;
      oo.max_iters = std::max(50, config.eval_max);
      opt = bfgs_minimize(fg, v0, oo);
    } catch (const Error& e) {
      rep.status = FitStatus::failed;
      rep.message += e.what();
      break;
    }

    GmmParams theta_next;
    try {
      theta_next = tf.unpack(opt.x);
    } catch (const Error& e) {
      rep.status = FitStatus::component_collapse;
      rep.message += e.what();
      break;
    }
    if (theta_next.pi.minCoeff() < kPiCollapse) {
      rep.status = FitStatus::component_collapse;
      rep.message += "mixing proportion collapsed below 1e-8";
      break;
    }

    MissingnessParams xi_next;
    if (config.fix_xi1_zero) {
      xi_next = xi;
    } else {
      const Vector ent = posterior_entropy(sample.y, theta_next);
      Vector x(ent.size());
      for (Eigen::Index j = 0; j < ent.size(); ++j) {
        x[j] = entropy_covariate(ent[j], config.covariate);
      }
      // warm start keeps the Bernoulli block monotone under step halving
      const LogisticFit lf = fit_logistic(x, m, xi);
      xi_next = lf.xi;
      rep.xi_separated = lf.separated;
      rep.xi_degenerate = lf.degenerate;
    }

    const double ll_new = log_lik_full(sample, {theta_next, xi_next}, config.covariate);
    rep.loglik_trace.push_back(ll_new);
    rep.iterations = it;

    const double change = std::max((opt.x - v0).cwiseAbs().maxCoeff(),
                                   std::max(std::abs(xi_next.xi0 - xi.xi0),
                                            std::abs(xi_next.xi1 - xi.xi1)));
    rep.theta = std::move(theta_next);
    xi = xi_next;
    const double gain = ll_new - ll;
    ll = ll_new;
    if (gain < stop_threshold(ll_new, config.rel_tol)) {
      rep.status = FitStatus::converged_tol;
      break;
    }
    if (change < config.sing_tol) {
      rep.status = FitStatus::converged_param;
      break;
    }
  }

  rep.xi = xi;
  rep.objective = -ll;
  rep.converged = rep.status == FitStatus::converged_tol ||
                  rep.status == FitStatus::converged_param;
  return rep;
}

}  // namespace gmmssl
