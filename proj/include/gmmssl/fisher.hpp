#pragma once

#include <cstdint>

#include "gmmssl/missingness.hpp"
#include "gmmssl/params.hpp"

namespace gmmssl {

// Two-class homoscedastic model in canonical position: Sigma = I,
// mu_1 = (delta, 0, ..., 0), mu_2 = 0.
struct CanonicalTwoClassModel {
  double delta = 1.0;  // Mahalanobis distance between the classes
  double pi1 = 0.5;
  int p = 1;

  GmmParams to_gmm() const;  // common-covariance GmmParams
};

struct DiscriminantCoefficients {
  double beta0 = 0.0;
  Vector beta1;
};

// beta1 = Sigma^-1 (mu1 - mu2), beta0 = -1/2 (mu1 + mu2)^T Sigma^-1 (mu1 - mu2)
DiscriminantCoefficients discriminant_coefficients(const Vector& mu1, const Vector& mu2,
                                                   const Matrix& sigma);

// Nuisance block held at truth during the beta-information estimation:
// mu_bar = pi1 mu1 + pi2 mu2 and Lambda = Sigma + pi1 pi2 (mu1-mu2)(mu1-mu2)^T.
struct BetaNuisance {
  Vector mu_bar;
  Matrix lambda;
};

BetaNuisance beta_nuisance(const GmmParams& two_class);
DiscriminantCoefficients beta_of(const GmmParams& two_class);

struct RecoveredTwoClass {
  double pi1 = 0.0;
  Vector mu1, mu2;
  Matrix sigma;
};

// Inverts (beta0, beta1) -> (pi1, mu1, mu2, Sigma) with the nuisance fixed;
// throws when beta leaves the valid region (degenerate separation or a
// non-positive-definite covariance).
RecoveredTwoClass recover_from_beta(const BetaNuisance& nuisance, double beta0,
                                    const Vector& beta1);

enum class InfoRegime { cc, pc_ig, pc_full, miss, clr };

struct InfoEstimate {
  Matrix info;        // (p+1) x (p+1), beta ordering (beta0 first)
  long n_mc = 0;      // draws used
  long nonfinite = 0; // draws dropped for non-finite scores
};

// Monte-Carlo Fisher information about beta for one likelihood regime:
// scores by central finite differences of the per-draw log likelihood in
// beta, nuisance and xi held at truth, averaged as outer products.
InfoEstimate mc_score_information(const CanonicalTwoClassModel& model,
                                  const MissingnessParams& xi, InfoRegime regime,
                                  long n_mc, uint64_t seed,
                                  EntropyCovariate mode = EntropyCovariate::log_entropy);

struct CompensationReport {
  CanonicalTwoClassModel model;
  MissingnessParams xi;
  EntropyCovariate mode = EntropyCovariate::log_entropy;
  long n_mc = 0;
  uint64_t seed = 0;
  long nonfinite = 0;
  double gamma = 0.0;  // estimated expected missing fraction

  Matrix i_cc, i_pc_ig, i_pc_full, i_miss;
  Matrix i_clr;           // E[S_clr S_clr^T]
  Matrix i_clr_weighted;  // E[q S_clr S_clr^T] / gamma, the weighting that
                          // makes the full-information decomposition exact

  Matrix compensation;  // i_miss - gamma * i_clr_weighted, symmetrized
  double min_eig_compensation = 0.0;
  double min_eig_compensation_unweighted = 0.0;

  // || i_pc_full - (i_cc - gamma * clr_term + i_miss) || / || i_cc ||
  double identity_residual = 0.0;             // clr_term = i_clr_weighted
  double identity_residual_unweighted = 0.0;  // clr_term = i_clr
  // || (i_cc - i_pc_ig) - gamma * i_clr || / || i_cc ||
  double mcar_residual = 0.0;
};

// One shared-draw Monte-Carlo pass over all regimes, plus the decomposition
// residuals and the compensation matrix of the information identity.
CompensationReport compensation_check(const CanonicalTwoClassModel& model,
                                      const MissingnessParams& xi, long n_mc,
                                      uint64_t seed,
                                      EntropyCovariate mode = EntropyCovariate::log_entropy);

}  // namespace gmmssl
