#pragma once

#include <cstdint>
#include <vector>

#include "gmmssl/fit.hpp"
#include "gmmssl/params.hpp"

namespace gmmssl {

// fraction of rows misclassified by the Bayes rule under theta
double erate(const RowMatrix& y, const std::vector<int>& true_labels,
             const GmmParams& theta);

// Monte-Carlo estimate of the conditional error rate of the plug-in rule
// theta_hat when data come from theta_true
double mc_conditional_error(const GmmParams& theta_hat, const GmmParams& theta_true,
                            long n_mc, uint64_t seed);

struct LoocvResult {
  double error_rate = 0.0;      // over converged folds
  int folds = 0;
  int failed_folds = 0;
  std::vector<int> predicted;   // per row; 0 where the fold fit failed
};

// Leave-one-out cross-validation.  truth supplies the held-out row's answer
// and, for the com fit, the training labels; ign/full folds keep the sample's
// observed missingness pattern and reinitialize with a per-fold seed derived
// from config.seed.  Non-convergent folds are excluded and counted.
LoocvResult loocv_error(const PartiallyLabeledSample& sample,
                        const std::vector<int>& truth, int g, const FitConfig& config,
                        int threads = 1);

struct EfficiencyReplicate {
  double err_com = 0.0, err_ign = 0.0, err_full = 0.0;
  bool ok = false;  // all three rules fitted and converged
};

struct EfficiencyOptions {
  int n_reps = 100;
  long n_mc_err = 200000;   // conditional-error draws per rule per replicate
  long n_mc_opt = 1000000;  // draws for the shared optimal-rate estimate
  int threads = 1;
  FitConfig fit;            // ncov, tolerances, covariate mode
};

struct EfficiencyResult {
  double err_opt = 0.0;
  std::vector<EfficiencyReplicate> replicates;
  int n_used = 0;  // replicates with all three rules converged
  double mean_excess_com = 0.0, mean_excess_ign = 0.0, mean_excess_full = 0.0;
  double median_excess_com = 0.0, median_excess_ign = 0.0, median_excess_full = 0.0;
  // ratio of the completely classified rule's excess to the compared rule's
  double ere_ign_mean = 0.0, ere_ign_median = 0.0;
  double ere_full_mean = 0.0, ere_full_median = 0.0;
};

// Empirical relative efficiency: per replicate, simulate n rows from
// theta_true, hide labels via the logistic mechanism, fit the completely
// classified (com), ignore-missingness (ign) and full rules, and estimate
// each rule's conditional error with shared draws; excesses are measured
// against one high-precision optimal rate.
EfficiencyResult empirical_relative_efficiency(const GmmParams& theta_true,
                                               const MissingnessParams& xi_true, int n,
                                               uint64_t seed,
                                               const EfficiencyOptions& opts = {});

}  // namespace gmmssl
