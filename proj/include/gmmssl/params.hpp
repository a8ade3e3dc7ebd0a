#pragma once

#include <optional>
#include <vector>

#include "gmmssl/linalg.hpp"

namespace gmmssl {

// one covariance shared by all classes vs one per class
enum class CovarianceMode { common = 1, unequal = 2 };

// Parameters of a g-class Gaussian mixture.  Construct through make() so the
// invariants hold: g >= 2, pi_i > 0 summing to 1 within 1e-12, covariances
// symmetric within 1e-10 and positive definite.
struct GmmParams {
  int g = 0;
  int p = 0;
  CovarianceMode cov_mode = CovarianceMode::unequal;
  Vector pi;                  // g
  std::vector<Vector> mu;     // g vectors of length p
  std::vector<Matrix> sigma;  // 1 matrix if common, g if unequal

  static GmmParams make(Vector pi, std::vector<Vector> mu,
                        std::vector<Matrix> sigma, CovarianceMode cov_mode);

  const Matrix& sigma_of(int i) const {
    return cov_mode == CovarianceMode::common ? sigma[0] : sigma[i];
  }
  int n_cov() const { return cov_mode == CovarianceMode::common ? 1 : g; }

  void validate() const;  // throws Error on any broken invariant
};

struct MissingnessParams {
  double xi0 = 0.0;
  double xi1 = 0.0;
};

struct FullParams {
  GmmParams theta;
  MissingnessParams xi;
};

// n observations of dimension p with labels observed for a subset of rows.
// Labels are 1-based class indices.
struct PartiallyLabeledSample {
  RowMatrix y;
  std::vector<std::optional<int>> labels;

  static PartiallyLabeledSample make(RowMatrix y,
                                     std::vector<std::optional<int>> labels);

  int n() const { return static_cast<int>(y.rows()); }
  int p() const { return static_cast<int>(y.cols()); }
  bool is_labeled(int j) const { return labels[j].has_value(); }
  int label(int j) const { return *labels[j]; }
  int n_labeled() const;
  int max_label() const;  // 0 when no row is labeled

  // throws if some label exceeds g
  void check_labels_within(int g) const;
};

}  // namespace gmmssl
