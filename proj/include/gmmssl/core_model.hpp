#pragma once

#include <vector>

#include "gmmssl/params.hpp"

namespace gmmssl {

// Batch evaluator for a fixed mixture: Cholesky factors, log normalizers and
// log mixing proportions are computed once, then reused per row.  All methods
// are const and reentrant; scratch buffers are caller-provided.
class MixtureEval {
 public:
  explicit MixtureEval(const GmmParams& theta);

  int g() const { return g_; }
  int p() const { return p_; }

  // a[i] = log pi_i + log phi_i(y); u is scratch for p doubles
  void class_logweights(const double* y, double* a, double* u) const;

  struct RowResult {
    double log_mix;  // log sum_i pi_i phi_i(y)
    double entropy;  // -sum_i tau_i log tau_i
  };
  // fills tau[0..g) with the posterior and returns mixture logpdf + entropy
  RowResult posterior_row(const double* y, double* tau, double* a, double* u) const;

  double log_density(int cls, const double* y, double* u) const;
  int classify_row(const double* y, double* a, double* u) const;  // 1-based

  const Matrix& chol(int i) const { return chol_[n_chol_ == 1 ? 0 : i]; }
  double log_norm(int i) const { return log_norm_[n_chol_ == 1 ? 0 : i]; }
  double log_pi(int i) const { return log_pi_[i]; }
  const double* mu_row(int i) const { return mu_.row(i).data(); }

 private:
  int g_, p_, n_chol_;
  RowMatrix mu_;  // g x p
  std::vector<Matrix> chol_;
  std::vector<double> log_norm_;
  std::vector<double> log_pi_;
};

double log_gaussian_pdf(const Vector& y, const Vector& mu, const Matrix& sigma);
double mixture_logpdf(const Vector& y, const GmmParams& theta);

// posterior class probabilities, one row per observation
Matrix posterior(const RowMatrix& y, const GmmParams& theta);
Vector posterior_point(const Vector& y, const GmmParams& theta);

// Shannon entropy of a probability vector, 0 log 0 = 0, natural log
double entropy(const Vector& tau);

// entropy of the posterior at each row
Vector posterior_entropy(const RowMatrix& y, const GmmParams& theta);

// maximum-posterior classification, ties resolved to the smallest index
int bayes_classify_point(const Vector& y, const GmmParams& theta);
std::vector<int> bayes_classify(const RowMatrix& y, const GmmParams& theta);

}  // namespace gmmssl
