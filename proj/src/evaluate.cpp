#include "gmmssl/evaluate.hpp"

#include <algorithm>
#include <cmath>

#include "gmmssl/core_model.hpp"
#include "gmmssl/errors.hpp"
#include "gmmssl/initial.hpp"
#include "gmmssl/parallel.hpp"
#include "gmmssl/rng.hpp"
#include "gmmssl/simulate.hpp"

namespace gmmssl {

double erate(const RowMatrix& y, const std::vector<int>& true_labels,
             const GmmParams& theta) {
  if (static_cast<size_t>(y.rows()) != true_labels.size()) {
    throw Error("erate: label count does not match rows");
  }
  if (y.rows() == 0) throw Error("erate: empty input");
  const std::vector<int> pred = bayes_classify(y, theta);
  long wrong = 0;
  for (size_t j = 0; j < pred.size(); ++j) wrong += pred[j] != true_labels[j];
  return static_cast<double>(wrong) / static_cast<double>(pred.size());
}

double mc_conditional_error(const GmmParams& theta_hat, const GmmParams& theta_true,
                            long n_mc, uint64_t seed) {
  if (n_mc < 1) throw Error("mc_conditional_error: n_mc must be positive");
  theta_hat.validate();
  theta_true.validate();
  if (theta_hat.p != theta_true.p) throw Error("mc_conditional_error: dimension mismatch");

  const int g = theta_true.g, p = theta_true.p;
  std::vector<Matrix> chol(theta_true.n_cov());
  for (int k = 0; k < theta_true.n_cov(); ++k) {
    chol[k] = cholesky_with_jitter(theta_true.sigma[k], k + 1);
  }
  MixtureEval ev(theta_hat);
  Vector a(theta_hat.g), u(p), z(p), y(p);

  Rng rng(seed);
  long wrong = 0;
  for (long j = 0; j < n_mc; ++j) {
    const double uu = rng.uniform();
    int cls = g - 1;
    double acc = 0.0;
    for (int i = 0; i < g; ++i) {
      acc += theta_true.pi[i];
      if (uu <= acc) {
        cls = i;
        break;
      }
    }
    for (int r = 0; r < p; ++r) z[r] = rng.normal();
    const Matrix& l = chol[theta_true.cov_mode == CovarianceMode::common ? 0 : cls];
    y = theta_true.mu[cls] + l.triangularView<Eigen::Lower>() * z;
    wrong += ev.classify_row(y.data(), a.data(), u.data()) != cls + 1;
  }
  return static_cast<double>(wrong) / static_cast<double>(n_mc);
}

namespace {

struct FoldOutcome {
  int predicted = 0;
  bool ok = false;
};

FoldOutcome run_fold(const PartiallyLabeledSample& sample, const std::vector<int>& truth,
                     int g, const FitConfig& config, int hold_out) {
  const int n = sample.n();
  RowMatrix train_y(n - 1, sample.p());
  std::vector<std::optional<int>> train_labels(n - 1);
  int at = 0;
  for (int j = 0; j < n; ++j) {
    if (j == hold_out) continue;
    train_y.row(at) = sample.y.row(j);
    if (config.fit_type == FitType::com) {
      train_labels[at] = truth[j];
    } else {
      train_labels[at] = sample.labels[j];
    }
    ++at;
  }
  const auto train = PartiallyLabeledSample::make(std::move(train_y), std::move(train_labels));

  FoldOutcome out;
  FitReport rep;
  try {
    if (config.fit_type == FitType::com) {
      rep = fit_complete(train, config, g);
    } else {
      const uint64_t fold_seed = Rng::derive_seed(config.seed, static_cast<uint64_t>(hold_out));
      const GmmParams theta0 = initial_values(train, g, config.ncov, fold_seed);
      if (config.fit_type == FitType::ign) {
        rep = fit_ignore(train, theta0, config);
      } else {
        rep = fit_full(train, theta0, initial_xi(train, theta0, config.covariate).xi,
                       config);
      }
    }
  } catch (const Error&) {
    return out;
  }
  if (!rep.converged) return out;

  out.ok = true;
  out.predicted = bayes_classify_point(sample.y.row(hold_out).transpose(), rep.theta);
  return out;
}

double median_of(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double hi = v[mid];
  if (v.size() % 2 == 0) {
    std::nth_element(v.begin(), v.begin() + mid - 1, v.begin() + mid);
    return 0.5 * (v[mid - 1] + hi);
  }
  return hi;
}

}  // namespace

LoocvResult loocv_error(const PartiallyLabeledSample& sample,
                        const std::vector<int>& truth, int g, const FitConfig& config,
                        int threads) {
  const int n = sample.n();
  if (static_cast<int>(truth.size()) != n) {
    throw Error("loocv: truth labels must cover every row");
  }
  for (int j = 0; j < n; ++j) {
    if (truth[j] < 1 || truth[j] > g) {
      throw Error("loocv: truth label out of range in row " + std::to_string(j + 1));
    }
  }

  std::vector<FoldOutcome> folds(n);
  parallel_for(n, threads,
               [&](int j) { folds[j] = run_fold(sample, truth, g, config, j); });

  LoocvResult res;
  res.folds = n;
  res.predicted.resize(n, 0);
  long wrong = 0, used = 0;
  for (int j = 0; j < n; ++j) {
    if (!folds[j].ok) {
      ++res.failed_folds;
      continue;
    }
    res.predicted[j] = folds[j].predicted;
    ++used;
    wrong += folds[j].predicted != truth[j];
  }
  res.error_rate = used > 0 ? static_cast<double>(wrong) / static_cast<double>(used)
                            : std::numeric_limits<double>::quiet_NaN();
  return res;
}

EfficiencyResult empirical_relative_efficiency(const GmmParams& theta_true,
                                               const MissingnessParams& xi_true, int n,
                                               uint64_t seed,
                                               const EfficiencyOptions& opts) {
  theta_true.validate();
  if (opts.n_reps < 1) throw Error("need at least one replicate");
  const int g = theta_true.g;

  EfficiencyResult res;
  res.err_opt = mc_conditional_error(theta_true, theta_true, opts.n_mc_opt,
                                     Rng::derive_seed(seed, 0));
  res.replicates.resize(opts.n_reps);

  FitConfig cfg = opts.fit;
  if (cfg.ncov != theta_true.cov_mode) cfg.ncov = theta_true.cov_mode;

  parallel_for(opts.n_reps, opts.threads, [&](int r) {
    const uint64_t base = static_cast<uint64_t>(r) * 4;
    EfficiencyReplicate rep;
    try {
      const MixtureDraw draw = rmix(n, theta_true, Rng::derive_seed(seed, base + 1));
      const std::vector<int> miss =
          rlabel(draw.y, {theta_true, xi_true}, Rng::derive_seed(seed, base + 2),
                 cfg.covariate);
      const uint64_t err_seed = Rng::derive_seed(seed, base + 4);

      const FitReport com = fit_complete(with_labels(draw), cfg, g);

      const PartiallyLabeledSample partial = mask_labels(draw, miss);
      const GmmParams theta0 =
          initial_values(partial, g, cfg.ncov, Rng::derive_seed(seed, base + 3));
      const FitReport ign = fit_ignore(partial, theta0, cfg);
      const FitReport full =
          fit_full(partial, theta0, initial_xi(partial, theta0, cfg.covariate).xi, cfg);

      if (com.converged && ign.converged && full.converged) {
        // shared error-draw stream so the three rules face the same test set
        rep.err_com = mc_conditional_error(com.theta, theta_true, opts.n_mc_err, err_seed);
        rep.err_ign = mc_conditional_error(ign.theta, theta_true, opts.n_mc_err, err_seed);
        rep.err_full =
            mc_conditional_error(full.theta, theta_true, opts.n_mc_err, err_seed);
        rep.ok = true;
      }
    } catch (const Error&) {
      rep.ok = false;
    }
    res.replicates[r] = rep;
  });

  std::vector<double> ex_com, ex_ign, ex_full;
  for (const auto& rep : res.replicates) {
    if (!rep.ok) continue;
    ex_com.push_back(rep.err_com - res.err_opt);
    ex_ign.push_back(rep.err_ign - res.err_opt);
    ex_full.push_back(rep.err_full - res.err_opt);
  }
  res.n_used = static_cast<int>(ex_com.size());
  if (res.n_used == 0) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    res.mean_excess_com = res.mean_excess_ign = res.mean_excess_full = nan;
    res.median_excess_com = res.median_excess_ign = res.median_excess_full = nan;
    res.ere_ign_mean = res.ere_ign_median = nan;
    res.ere_full_mean = res.ere_full_median = nan;
    return res;
  }
  const auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  res.mean_excess_com = mean(ex_com);
  res.mean_excess_ign = mean(ex_ign);
  res.mean_excess_full = mean(ex_full);
  res.median_excess_com = median_of(ex_com);
  res.median_excess_ign = median_of(ex_ign);
  res.median_excess_full = median_of(ex_full);
  res.ere_ign_mean = res.mean_excess_com / res.mean_excess_ign;
  res.ere_ign_median = res.median_excess_com / res.median_excess_ign;
  res.ere_full_mean = res.mean_excess_com / res.mean_excess_full;
  res.ere_full_median = res.median_excess_com / res.median_excess_full;
  return res;
}

}  // namespace gmmssl
