#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "gmmssl/missingness.hpp"
#include "gmmssl/params.hpp"

namespace gmmssl {

enum class FitType { com, ign, full };

enum class FitStatus {
  converged_tol,       // objective increase below tolerance
  converged_param,     // parameter change below sing_tol
  iteration_limit,     // iter_max reached
  component_collapse,  // a mixing proportion or covariance degenerated
  failed               // optimizer failure or invalid state
};
const char* to_string(FitStatus status);
const char* to_string(FitType type);

struct FitConfig {
  FitType fit_type = FitType::full;
  CovarianceMode ncov = CovarianceMode::unequal;
  int iter_max = 500;
  int eval_max = 500;
  double rel_tol = 1e-15;
  double sing_tol = 1e-15;
  uint64_t seed = 0;
  EntropyCovariate covariate = EntropyCovariate::log_entropy;
  bool fix_xi1_zero = false;

  void validate() const;  // positive limits, tolerances in (0,1)
};

struct FitReport {
  GmmParams theta;
  std::optional<MissingnessParams> xi;  // present for full fits only
  // final negative log likelihood of the family that was fitted
  double objective = std::numeric_limits<double>::quiet_NaN();
  FitStatus status = FitStatus::failed;
  bool converged = false;
  int iterations = 0;
  // log likelihood at the initial parameters, then after each iteration
  std::vector<double> loglik_trace;
  bool xi_separated = false;
  bool xi_degenerate = false;
  std::string message;

  double loglik() const { return -objective; }
};

// Closed-form maximum likelihood on a fully labeled sample: class
// proportions, class means, class covariances with divisor n_i (pooled with
// divisor n when ncov is common).  g defaults to the largest label.
FitReport fit_complete(const PartiallyLabeledSample& sample, const FitConfig& config = {},
                       int g = 0);

// EM for the likelihood that ignores the missingness mechanism
FitReport fit_ignore(const PartiallyLabeledSample& sample, const GmmParams& init,
                     const FitConfig& config = {});

// ECM for the full likelihood: E-step responsibilities, CM-1 quasi-Newton in
// the unconstrained parameterization warm-started at the current theta
// (results that lower the surrogate are rejected), CM-2 logistic refit of xi
// on the updated entropies.
FitReport fit_full(const PartiallyLabeledSample& sample, const GmmParams& init_theta,
                   const MissingnessParams& init_xi, const FitConfig& config = {});

// responsibilities under theta: observed indicator for labeled rows,
// posterior probabilities for unlabeled rows
Matrix responsibilities(const PartiallyLabeledSample& sample, const GmmParams& theta);

}  // namespace gmmssl
