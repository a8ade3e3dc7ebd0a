#pragma once

#include <cstdint>
#include <vector>

#include "gmmssl/missingness.hpp"
#include "gmmssl/params.hpp"

namespace gmmssl {

struct MixtureDraw {
  RowMatrix y;              // n x p
  std::vector<int> labels;  // 1-based class of each row
};

// n draws from the mixture: class from the categorical pi, features from the
// class Gaussian via its Cholesky factor; deterministic given the seed
MixtureDraw rmix(int n, const GmmParams& theta, uint64_t seed);

// missing-label indicators m_j ~ Bernoulli(q_prob(y_j; psi)), independently;
// 1 means the label is hidden
std::vector<int> rlabel(const RowMatrix& y, const FullParams& psi, uint64_t seed,
                        EntropyCovariate mode = EntropyCovariate::log_entropy);

// combine a draw with missing indicators into a partially labeled sample
PartiallyLabeledSample mask_labels(const MixtureDraw& draw, const std::vector<int>& missing);

// fully labeled sample from a draw
PartiallyLabeledSample with_labels(const MixtureDraw& draw);

}  // namespace gmmssl
