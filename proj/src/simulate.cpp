#include "gmmssl/simulate.hpp"

#include "gmmssl/errors.hpp"
#include "gmmssl/linalg.hpp"
#include "gmmssl/rng.hpp"

namespace gmmssl {

MixtureDraw rmix(int n, const GmmParams& theta, uint64_t seed) {
  if (n < 1) throw Error("rmix needs n >= 1");
  theta.validate();
  const int g = theta.g, p = theta.p;

  std::vector<Matrix> chol(theta.n_cov());
  for (int k = 0; k < theta.n_cov(); ++k) {
    chol[k] = cholesky_with_jitter(theta.sigma[k], k + 1);
  }

  MixtureDraw out;
  out.y.resize(n, p);
  out.labels.resize(n);
  Rng rng(seed);
  Vector z(p);
  for (int j = 0; j < n; ++j) {
    const double u = rng.uniform();
    int cls = g - 1;  // cumulative scan; the last class absorbs rounding
    double acc = 0.0;
    for (int i = 0; i < g; ++i) {
      acc += theta.pi[i];
      if (u <= acc) {
        cls = i;
        break;
      }
    }
    out.labels[j] = cls + 1;
    for (int r = 0; r < p; ++r) z[r] = rng.normal();
    const Matrix& l = chol[theta.cov_mode == CovarianceMode::common ? 0 : cls];
    out.y.row(j) = (theta.mu[cls] + l.triangularView<Eigen::Lower>() * z).transpose();
  }
  return out;
}

std::vector<int> rlabel(const RowMatrix& y, const FullParams& psi, uint64_t seed,
                        EntropyCovariate mode) {
  const Vector q = q_prob_batch(y, psi, mode);
  std::vector<int> m(y.rows());
  Rng rng(seed);
  for (Eigen::Index j = 0; j < y.rows(); ++j) m[j] = rng.uniform() < q[j] ? 1 : 0;
  return m;
}

PartiallyLabeledSample mask_labels(const MixtureDraw& draw, const std::vector<int>& missing) {
  if (missing.size() != draw.labels.size()) {
    throw Error("missing indicator length does not match the draw");
  }
  std::vector<std::optional<int>> labels(draw.labels.size());
  for (size_t j = 0; j < draw.labels.size(); ++j) {
    if (!missing[j]) labels[j] = draw.labels[j];
  }
  return PartiallyLabeledSample::make(draw.y, std::move(labels));
}

PartiallyLabeledSample with_labels(const MixtureDraw& draw) {
  std::vector<std::optional<int>> labels(draw.labels.begin(), draw.labels.end());
  return PartiallyLabeledSample::make(draw.y, std::move(labels));
}

}  // namespace gmmssl
