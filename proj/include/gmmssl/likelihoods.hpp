#pragma once

#include "gmmssl/missingness.hpp"
#include "gmmssl/params.hpp"

namespace gmmssl {

// sum over labeled rows of log(pi_z phi_z(y))
double log_lik_classified(const PartiallyLabeledSample& sample, const GmmParams& theta);

// sum over unlabeled rows of the mixture log density
double log_lik_unclassified(const PartiallyLabeledSample& sample, const GmmParams& theta);

// likelihood that ignores the missingness mechanism: classified + unclassified
double log_lik_ignore(const PartiallyLabeledSample& sample, const GmmParams& theta);

// full likelihood: log_lik_ignore(theta) + log_lik_miss(psi), exactly that sum
double log_lik_full(const PartiallyLabeledSample& sample, const FullParams& psi,
                    EntropyCovariate mode = EntropyCovariate::log_entropy);

}  // namespace gmmssl
