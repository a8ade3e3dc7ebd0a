#include "gmmssl/likelihoods.hpp"

#include "gmmssl/core_model.hpp"

namespace gmmssl {

double log_lik_classified(const PartiallyLabeledSample& sample, const GmmParams& theta) {
  sample.check_labels_within(theta.g);
  MixtureEval ev(theta);
  Vector u(theta.p);
  double ll = 0.0;
  for (int j = 0; j < sample.n(); ++j) {
    if (!sample.is_labeled(j)) continue;
    const int cls = sample.label(j) - 1;
    ll += ev.log_pi(cls) + ev.log_density(cls, sample.y.row(j).data(), u.data());
  }
  return ll;
}

double log_lik_unclassified(const PartiallyLabeledSample& sample, const GmmParams& theta) {
  MixtureEval ev(theta);
  Vector a(theta.g), u(theta.p), tau(theta.g);
  double ll = 0.0;
  for (int j = 0; j < sample.n(); ++j) {
    if (sample.is_labeled(j)) continue;
    ll += ev.posterior_row(sample.y.row(j).data(), tau.data(), a.data(), u.data()).log_mix;
  }
  return ll;
}

double log_lik_ignore(const PartiallyLabeledSample& sample, const GmmParams& theta) {
  return log_lik_classified(sample, theta) + log_lik_unclassified(sample, theta);
}

double log_lik_full(const PartiallyLabeledSample& sample, const FullParams& psi,
                    EntropyCovariate mode) {
  return log_lik_ignore(sample, psi.theta) + log_lik_miss(sample, psi, mode);
}

}  // namespace gmmssl
