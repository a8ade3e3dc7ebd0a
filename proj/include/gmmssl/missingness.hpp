#pragma once

#include <optional>
#include <vector>

#include "gmmssl/params.hpp"

namespace gmmssl {

// covariate fed to the logistic missingness model: log of the posterior
// entropy (the default) or the raw entropy itself
enum class EntropyCovariate { log_entropy, raw_entropy };

// entropies are floored here before taking the log
inline constexpr double kEntropyFloor = 1e-300;

// log(max(e, floor)) or e, depending on mode
double entropy_covariate(double entropy_value, EntropyCovariate mode);

// probability that a label is missing at y:
// logistic(xi0 + xi1 * covariate(entropy of posterior under psi.theta))
double q_prob(const Vector& y, const FullParams& psi,
              EntropyCovariate mode = EntropyCovariate::log_entropy);
Vector q_prob_batch(const RowMatrix& y, const FullParams& psi,
                    EntropyCovariate mode = EntropyCovariate::log_entropy);

// Bernoulli log likelihood of the observed missingness indicators
// (m_j = 1 when the label is missing)
double log_lik_miss(const PartiallyLabeledSample& sample, const FullParams& psi,
                    EntropyCovariate mode = EntropyCovariate::log_entropy);

// expected fraction of missing labels under psi, averaged over rows of y
double expected_missing_fraction(const RowMatrix& y, const FullParams& psi,
                                 EntropyCovariate mode = EntropyCovariate::log_entropy);

struct LogisticFit {
  MissingnessParams xi;
  bool separated = false;   // a coefficient ran to the +-1e3 cap
  bool degenerate = false;  // slope not identifiable (constant response or covariate)
  int iterations = 0;
  double loglik = 0.0;
  bool flagged() const { return separated || degenerate; }
};

// Single-covariate logistic regression of response (0/1) on x, fitted by
// iteratively reweighted least squares with step halving.  Stops when the
// largest coefficient change drops below 1e-10 or after 100 iterations.
// Constant response: slope 0, intercept capped at -+30, degenerate flag.
// Separation (a coefficient beyond 1e3 with the likelihood still climbing):
// coefficients capped at +-1e3, separated flag.
LogisticFit fit_logistic(const Vector& x, const std::vector<int>& response,
                         std::optional<MissingnessParams> init = std::nullopt);

// Bernoulli log likelihood of response given coefficients, shared by the
// fitter and its tests
double logistic_loglik(const Vector& x, const std::vector<int>& response,
                       const MissingnessParams& xi);

}  // namespace gmmssl
