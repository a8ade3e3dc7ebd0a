#include "gmmssl/params.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "gmmssl/errors.hpp"

namespace gmmssl {

GmmParams GmmParams::make(Vector pi, std::vector<Vector> mu,
                          std::vector<Matrix> sigma, CovarianceMode cov_mode) {
  GmmParams out;
  out.g = static_cast<int>(pi.size());
  out.p = mu.empty() ? 0 : static_cast<int>(mu[0].size());
  out.cov_mode = cov_mode;
  out.pi = std::move(pi);
  out.mu = std::move(mu);
  out.sigma = std::move(sigma);
  out.validate();
  return out;
}

void GmmParams::validate() const {
  if (g < 2) throw Error("mixture needs at least 2 classes, got " + std::to_string(g));
  if (p < 1) throw Error("mixture dimension must be positive");
  if (static_cast<int>(pi.size()) != g) throw Error("pi has wrong length");
  if (static_cast<int>(mu.size()) != g) throw Error("mu has wrong number of vectors");
  const int want_cov = n_cov();
  if (static_cast<int>(sigma.size()) != want_cov) {
    throw Error("expected " + std::to_string(want_cov) + " covariance matrices, got " +
                std::to_string(sigma.size()));
  }

  double sum = 0.0;
  for (int i = 0; i < g; ++i) {
    if (!(pi[i] > 0.0)) {
      throw Error("mixing proportion for class " + std::to_string(i + 1) +
                  " must be positive");
    }
    sum += pi[i];
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw Error("mixing proportions sum to " + std::to_string(sum) + ", not 1");
  }

  for (int i = 0; i < g; ++i) {
    if (static_cast<int>(mu[i].size()) != p) {
      throw Error("mean for class " + std::to_string(i + 1) + " has wrong length");
    }
    if (!mu[i].allFinite()) {
      throw Error("mean for class " + std::to_string(i + 1) + " has non-finite entries");
    }
  }

  for (int k = 0; k < want_cov; ++k) {
    const Matrix& s = sigma[k];
    if (s.rows() != p || s.cols() != p) {
      throw Error("covariance " + std::to_string(k + 1) + " has wrong shape");
    }
    if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
      throw Error("covariance " + std::to_string(k + 1) + " is not symmetric");
    }
    cholesky_with_jitter(s, k + 1);  // throws when not positive definite
  }
}

PartiallyLabeledSample PartiallyLabeledSample::make(
    RowMatrix y, std::vector<std::optional<int>> labels) {
  if (static_cast<size_t>(y.rows()) != labels.size()) {
    throw Error("sample has " + std::to_string(y.rows()) + " rows but " +
                std::to_string(labels.size()) + " label entries");
  }
  if (y.rows() == 0 || y.cols() == 0) throw Error("sample must be non-empty");
  if (!y.allFinite()) throw Error("sample contains non-finite features");
  for (size_t j = 0; j < labels.size(); ++j) {
    if (labels[j] && *labels[j] < 1) {
      throw Error("label in row " + std::to_string(j + 1) + " must be >= 1");
    }
  }
  PartiallyLabeledSample out;
  out.y = std::move(y);
  out.labels = std::move(labels);
  return out;
}

int PartiallyLabeledSample::n_labeled() const {
  int c = 0;
  for (const auto& l : labels) c += l.has_value();
  return c;
}

int PartiallyLabeledSample::max_label() const {
  int m = 0;
  for (const auto& l : labels) {
    if (l && *l > m) m = *l;
  }
  return m;
}

void PartiallyLabeledSample::check_labels_within(int g) const {
  for (size_t j = 0; j < labels.size(); ++j) {
    if (labels[j] && *labels[j] > g) {
      throw Error("label " + std::to_string(*labels[j]) + " in row " +
                  std::to_string(j + 1) + " exceeds the number of classes " +
                  std::to_string(g));
    }
  }
}

}  // namespace gmmssl
