#pragma once

#include "gmmssl/missingness.hpp"
#include "gmmssl/params.hpp"

namespace gmmssl {

// Starting values for the EM/ECM fitters.  When every class has at least
// p+1 labeled rows the per-class sample proportions, means and covariances
// of the labeled rows are used (pooled covariance when mode is common).
// Otherwise k-means with 10 seeded restarts runs on all rows; clusters are
// matched to classes by majority vote among their labeled members, and any
// unmatched clusters take the remaining class indices in decreasing size
// order.
GmmParams initial_values(const PartiallyLabeledSample& sample, int g,
                         CovarianceMode mode, uint64_t seed = 0);

// Logistic fit of the missing indicators on the entropy covariate under a
// pilot estimate theta0.
LogisticFit initial_xi(const PartiallyLabeledSample& sample, const GmmParams& theta0,
                       EntropyCovariate mode = EntropyCovariate::log_entropy);

}  // namespace gmmssl
