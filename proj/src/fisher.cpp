#include "gmmssl/fisher.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "gmmssl/errors.hpp"
#include "gmmssl/kernels/kernels.hpp"
#include "gmmssl/linalg.hpp"
#include "gmmssl/rng.hpp"
#include "gmmssl/scalar_math.hpp"

namespace gmmssl {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
}

GmmParams CanonicalTwoClassModel::to_gmm() const {
  if (!(delta >= 0.0)) throw Error("delta must be nonnegative");
  if (!(pi1 > 0.0 && pi1 < 1.0)) throw Error("pi1 must be in (0, 1)");
  if (p < 1) throw Error("dimension must be positive");
  Vector pi(2);
  pi << pi1, 1.0 - pi1;
  Vector mu1 = Vector::Zero(p);
  mu1[0] = delta;
  return GmmParams::make(pi, {mu1, Vector::Zero(p)}, {Matrix::Identity(p, p)},
                         CovarianceMode::common);
}

DiscriminantCoefficients discriminant_coefficients(const Vector& mu1, const Vector& mu2,
                                                   const Matrix& sigma) {
  if (mu1.size() != mu2.size() || sigma.rows() != mu1.size()) {
    throw Error("discriminant_coefficients: dimension mismatch");
  }
  const Matrix l = cholesky_with_jitter(sigma, 1);
  DiscriminantCoefficients out;
  out.beta1 = l.transpose().triangularView<Eigen::Upper>().solve(
      Matrix(l.triangularView<Eigen::Lower>().solve(mu1 - mu2)));
  out.beta0 = -0.5 * (mu1 + mu2).dot(out.beta1);
  return out;
}

BetaNuisance beta_nuisance(const GmmParams& two_class) {
  if (two_class.g != 2 || two_class.cov_mode != CovarianceMode::common) {
    throw Error("beta parameterization needs a two-class common-covariance model");
  }
  const double pi1 = two_class.pi[0], pi2 = two_class.pi[1];
  const Vector delta = two_class.mu[0] - two_class.mu[1];
  BetaNuisance nu;
  nu.mu_bar = pi1 * two_class.mu[0] + pi2 * two_class.mu[1];
  nu.lambda = two_class.sigma[0] + (pi1 * pi2) * delta * delta.transpose();
  return nu;
}

DiscriminantCoefficients beta_of(const GmmParams& two_class) {
  if (two_class.g != 2 || two_class.cov_mode != CovarianceMode::common) {
    throw Error("beta parameterization needs a two-class common-covariance model");
  }
  return discriminant_coefficients(two_class.mu[0], two_class.mu[1], two_class.sigma[0]);
}

RecoveredTwoClass recover_from_beta(const BetaNuisance& nuisance, double beta0,
                                    const Vector& beta1) {
  const Vector lb = nuisance.lambda * beta1;
  const double c = beta1.dot(lb);
  const double s = -2.0 * (beta0 + nuisance.mu_bar.dot(beta1));
  const double d2 = -2.0 + std::sqrt(4.0 + s * s + 4.0 * c);
  if (!(d2 > 1e-12)) throw Error("beta is at the degenerate zero-separation point");
  const double pi1 = 0.5 * (1.0 - s / d2);
  if (!(pi1 > 0.0 && pi1 < 1.0)) {
    throw Error("beta maps to a prior outside (0, 1)");
  }
  const double pi2 = 1.0 - pi1;

  RecoveredTwoClass rec;
  rec.pi1 = pi1;
  const Vector delta = lb / (1.0 + pi1 * pi2 * d2);
  Matrix sigma = nuisance.lambda - (pi1 * pi2) * delta * delta.transpose();
  rec.sigma = 0.5 * (sigma + sigma.transpose());
  cholesky_with_jitter(rec.sigma, 1);  // reject non-positive-definite recoveries
  rec.mu1 = nuisance.mu_bar + pi2 * delta;
  rec.mu2 = nuisance.mu_bar - pi1 * delta;
  return rec;
}

namespace {

constexpr int kBlock = 8192;
enum { R_CC = 0, R_IG = 1, R_FULL = 2, R_MISS = 3, R_CLR = 4, R_COUNT = 5 };

int regime_index(InfoRegime r) {
  switch (r) {
    case InfoRegime::cc: return R_CC;
    case InfoRegime::pc_ig: return R_IG;
    case InfoRegime::pc_full: return R_FULL;
    case InfoRegime::miss: return R_MISS;
    case InfoRegime::clr: return R_CLR;
  }
  return R_CC;
}

// one two-class parameter point, prepared for batch density evaluation
struct ClassSet {
  double log_pi1 = 0, log_pi2 = 0;
  Vector mu1, mu2;
  Matrix chol;
  double log_norm = 0;  // common covariance, shared by both classes
  double inv_var = 0;   // p == 1 fast path
};

ClassSet make_set(double pi1, const Vector& mu1, const Vector& mu2, const Matrix& sigma) {
  ClassSet s;
  s.log_pi1 = std::log(pi1);
  s.log_pi2 = std::log1p(-pi1);
  s.mu1 = mu1;
  s.mu2 = mu2;
  s.chol = cholesky_with_jitter(sigma, 1);
  const int p = static_cast<int>(mu1.size());
  s.log_norm = -0.5 * p * kLog2Pi - 0.5 * log_det_from_cholesky(s.chol);
  if (p == 1) s.inv_var = 1.0 / (s.chol(0, 0) * s.chol(0, 0));
  return s;
}

struct Scratch {
  std::vector<double> a1, a2, d, spp, spm, tau, lmix, e, cov, eta, spe, u;
  explicit Scratch(int block, int p)
      : a1(block), a2(block), d(block), spp(block), spm(block), tau(block),
        lmix(block), e(block), cov(block), eta(block), spe(block), u(p) {}
};

void class_logweights(const ClassSet& cs, const double* y, int nrow, int p,
                      Scratch& w) {
  const auto& k = kernels::active();
  if (p == 1) {
    k.gauss1d(y, cs.mu1[0], cs.inv_var, cs.log_norm + cs.log_pi1, w.a1.data(), nrow);
    k.gauss1d(y, cs.mu2[0], cs.inv_var, cs.log_norm + cs.log_pi2, w.a2.data(), nrow);
    return;
  }
  for (int j = 0; j < nrow; ++j) {
    const double* yr = y + static_cast<size_t>(j) * p;
    w.a1[j] = cs.log_pi1 + cs.log_norm -
              0.5 * forward_solve_squared(cs.chol, yr, cs.mu1.data(), w.u.data());
    w.a2[j] = cs.log_pi2 + cs.log_norm -
              0.5 * forward_solve_squared(cs.chol, yr, cs.mu2.data(), w.u.data());
  }
}

// shared pipeline up to the missingness linear predictor eta
void eval_eta(const ClassSet& cs, const double* y, int nrow, int p, double xi0,
              double xi1, bool log_mode, Scratch& w) {
  const auto& k = kernels::active();
  class_logweights(cs, y, nrow, p, w);
  k.sub(w.a1.data(), w.a2.data(), w.d.data(), nrow);
  k.softplus(w.d.data(), w.spp.data(), nrow);
  // softplus(-d) = softplus(d) - d exactly
  k.sub(w.spp.data(), w.d.data(), w.spm.data(), nrow);
  k.logistic(w.d.data(), w.tau.data(), nrow);
  for (int j = 0; j < nrow; ++j) {
    w.lmix[j] = w.a2[j] + w.spp[j];
    // entropy from log tau_1 = -softplus(-d), log tau_2 = -softplus(d)
    w.e[j] = w.tau[j] * w.spm[j] + (1.0 - w.tau[j]) * w.spp[j];
  }
  if (log_mode) {
    for (int j = 0; j < nrow; ++j) w.cov[j] = std::max(w.e[j], kEntropyFloor);
    k.log(w.cov.data(), w.cov.data(), nrow);
  } else {
    std::copy(w.e.begin(), w.e.begin() + nrow, w.cov.begin());
  }
  for (int j = 0; j < nrow; ++j) w.eta[j] = xi0 + xi1 * w.cov[j];
}

void eval_set(const ClassSet& cs, const double* y, const int* z, const double* m,
              int nrow, int p, double xi0, double xi1, bool log_mode, Scratch& w,
              double* lcc, double* lig, double* lfull, double* lmiss, double* lclr) {
  const auto& k = kernels::active();
  eval_eta(cs, y, nrow, p, xi0, xi1, log_mode, w);
  k.softplus(w.eta.data(), w.spe.data(), nrow);
  for (int j = 0; j < nrow; ++j) {
    const double cc = z[j] == 1 ? w.a1[j] : w.a2[j];
    lcc[j] = cc;
    lclr[j] = cc - w.lmix[j];
    lmiss[j] = m[j] * w.eta[j] - w.spe[j];
    lig[j] = m[j] != 0.0 ? w.lmix[j] : cc;
    lfull[j] = lig[j] + lmiss[j];
  }
}

CompensationReport run_engine(const CanonicalTwoClassModel& model,
                              const MissingnessParams& xi, long n_mc, uint64_t seed,
                              EntropyCovariate mode) {
  if (n_mc < 1) throw Error("n_mc must be positive");
  const int p = model.p;
  const int nb = p + 1;
  const bool log_mode = mode == EntropyCovariate::log_entropy;
  const auto& k = kernels::active();

  const GmmParams truth = model.to_gmm();
  const BetaNuisance nu = beta_nuisance(truth);
  const DiscriminantCoefficients beta = beta_of(truth);

  Vector bvec(nb);
  bvec[0] = beta.beta0;
  bvec.tail(p) = beta.beta1;

  std::vector<double> inv2h(nb);
  std::vector<ClassSet> sets;
  sets.reserve(2 * nb);
  for (int r = 0; r < nb; ++r) {
    const double h = 1e-5 * (1.0 + std::abs(bvec[r]));
    inv2h[r] = 1.0 / (2.0 * h);
    for (const double sgn : {1.0, -1.0}) {
      Vector b = bvec;
      b[r] += sgn * h;
      const RecoveredTwoClass rec = recover_from_beta(nu, b[0], b.tail(p));
      sets.push_back(make_set(rec.pi1, rec.mu1, rec.mu2, rec.sigma));
    }
  }
  const ClassSet tset = make_set(model.pi1, truth.mu[0], truth.mu[1], truth.sigma[0]);

  Scratch w(kBlock, p);
  std::vector<double> y(static_cast<size_t>(kBlock) * p), m(kBlock), q(kBlock),
      sqrtq(kBlock), wscore(static_cast<size_t>(nb) * kBlock);
  std::vector<int> z(kBlock);
  // l[regime][set] and s[regime][coord], each a block-long array
  std::vector<std::vector<double>> l[R_COUNT], s[R_COUNT];
  for (int reg = 0; reg < R_COUNT; ++reg) {
    l[reg].assign(2 * nb, std::vector<double>(kBlock));
    s[reg].assign(nb, std::vector<double>(kBlock));
  }

  Matrix acc[R_COUNT];
  for (auto& a : acc) a = Matrix::Zero(nb, nb);
  Matrix accw = Matrix::Zero(nb, nb);
  double q_sum = 0.0;
  long valid_total = 0, nonfinite = 0;

  Rng rng(seed);
  for (long done = 0; done < n_mc; done += kBlock) {
    const int B = static_cast<int>(std::min<long>(kBlock, n_mc - done));

    for (int j = 0; j < B; ++j) {
      z[j] = rng.uniform() <= model.pi1 ? 1 : 2;
      for (int r = 0; r < p; ++r) {
        y[static_cast<size_t>(j) * p + r] =
            (z[j] == 1 ? truth.mu[0][r] : 0.0) + rng.normal();
      }
    }
    // q under the true parameters drives the indicators and the weighting
    eval_eta(tset, y.data(), B, p, xi.xi0, xi.xi1, log_mode, w);
    k.logistic(w.eta.data(), q.data(), B);
    for (int j = 0; j < B; ++j) m[j] = rng.uniform() < q[j] ? 1.0 : 0.0;

    for (int set = 0; set < 2 * nb; ++set) {
      eval_set(sets[set], y.data(), z.data(), m.data(), B, p, xi.xi0, xi.xi1, log_mode,
               w, l[R_CC][set].data(), l[R_IG][set].data(), l[R_FULL][set].data(),
               l[R_MISS][set].data(), l[R_CLR][set].data());
    }

    for (int reg = 0; reg < R_COUNT; ++reg) {
      for (int r = 0; r < nb; ++r) {
        const double* lp = l[reg][2 * r].data();
        const double* lm = l[reg][2 * r + 1].data();
        double* out = s[reg][r].data();
        const double c = inv2h[r];
        for (int j = 0; j < B; ++j) out[j] = (lp[j] - lm[j]) * c;
      }
    }

    int valid = B;
    for (int j = 0; j < B; ++j) {
      bool ok = std::isfinite(q[j]);
      for (int reg = 0; reg < R_COUNT && ok; ++reg) {
        for (int r = 0; r < nb; ++r) {
          if (!std::isfinite(s[reg][r][j])) {
            ok = false;
            break;
          }
        }
      }
      if (!ok) {
        for (int reg = 0; reg < R_COUNT; ++reg) {
          for (int r = 0; r < nb; ++r) s[reg][r][j] = 0.0;
        }
        q[j] = 0.0;
        --valid;
        ++nonfinite;
      }
    }
    valid_total += valid;

    for (int reg = 0; reg < R_COUNT; ++reg) {
      for (int r = 0; r < nb; ++r) {
        for (int c = r; c < nb; ++c) {
          acc[reg](r, c) += k.dot(s[reg][r].data(), s[reg][c].data(), B);
        }
      }
    }
    for (int j = 0; j < B; ++j) sqrtq[j] = std::sqrt(q[j]);
    for (int r = 0; r < nb; ++r) {
      double* out = wscore.data() + static_cast<size_t>(r) * kBlock;
      for (int j = 0; j < B; ++j) out[j] = s[R_CLR][r][j] * sqrtq[j];
    }
    for (int r = 0; r < nb; ++r) {
      for (int c = r; c < nb; ++c) {
        accw(r, c) += k.dot(wscore.data() + static_cast<size_t>(r) * kBlock,
                            wscore.data() + static_cast<size_t>(c) * kBlock, B);
      }
    }
    q_sum += k.sum(q.data(), B);
  }

  if (valid_total == 0) throw Error("all Monte-Carlo draws produced non-finite scores");

  const auto finish = [nb](Matrix& a, double denom) {
    a /= denom;
    for (int r = 0; r < nb; ++r) {
      for (int c = 0; c < r; ++c) a(r, c) = a(c, r);
    }
  };
  for (auto& a : acc) finish(a, static_cast<double>(valid_total));
  finish(accw, q_sum > 0.0 ? q_sum : 1.0);

  CompensationReport rep;
  rep.model = model;
  rep.xi = xi;
  rep.mode = mode;
  rep.n_mc = n_mc;
  rep.seed = seed;
  rep.nonfinite = nonfinite;
  rep.gamma = q_sum / static_cast<double>(valid_total);
  rep.i_cc = acc[R_CC];
  rep.i_pc_ig = acc[R_IG];
  rep.i_pc_full = acc[R_FULL];
  rep.i_miss = acc[R_MISS];
  rep.i_clr = acc[R_CLR];
  rep.i_clr_weighted = accw;

  const double cc_norm = rep.i_cc.norm();
  rep.identity_residual =
      (rep.i_pc_full - (rep.i_cc - rep.gamma * rep.i_clr_weighted + rep.i_miss)).norm() /
      cc_norm;
  rep.identity_residual_unweighted =
      (rep.i_pc_full - (rep.i_cc - rep.gamma * rep.i_clr + rep.i_miss)).norm() / cc_norm;
  rep.mcar_residual =
      ((rep.i_cc - rep.i_pc_ig) - rep.gamma * rep.i_clr).norm() / cc_norm;

  Matrix comp = rep.i_miss - rep.gamma * rep.i_clr_weighted;
  rep.compensation = 0.5 * (comp + comp.transpose());
  rep.min_eig_compensation =
      Eigen::SelfAdjointEigenSolver<Matrix>(rep.compensation).eigenvalues().minCoeff();
  Matrix comp_u = rep.i_miss - rep.gamma * rep.i_clr;
  comp_u = 0.5 * (comp_u + comp_u.transpose());
  rep.min_eig_compensation_unweighted =
      Eigen::SelfAdjointEigenSolver<Matrix>(comp_u).eigenvalues().minCoeff();
  return rep;
}

}  // namespace

InfoEstimate mc_score_information(const CanonicalTwoClassModel& model,
                                  const MissingnessParams& xi, InfoRegime regime,
                                  long n_mc, uint64_t seed, EntropyCovariate mode) {
  const CompensationReport rep = run_engine(model, xi, n_mc, seed, mode);
  InfoEstimate est;
  est.n_mc = rep.n_mc;
  est.nonfinite = rep.nonfinite;
  switch (regime_index(regime)) {
    case R_CC: est.info = rep.i_cc; break;
    case R_IG: est.info = rep.i_pc_ig; break;
    case R_FULL: est.info = rep.i_pc_full; break;
    case R_MISS: est.info = rep.i_miss; break;
    default: est.info = rep.i_clr; break;
  }
  return est;
}

CompensationReport compensation_check(const CanonicalTwoClassModel& model,
                                      const MissingnessParams& xi, long n_mc,
                                      uint64_t seed, EntropyCovariate mode) {
  return run_engine(model, xi, n_mc, seed, mode);
}

}  // namespace gmmssl
