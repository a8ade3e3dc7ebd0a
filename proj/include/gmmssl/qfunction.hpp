#pragma once

#include "gmmssl/missingness.hpp"
#include "gmmssl/params.hpp"
#include "gmmssl/transform.hpp"

namespace gmmssl {

// Surrogate objective maximized in the first conditional step of each ECM
// iteration: the expected complete-data log likelihood under fixed
// responsibilities plus the Bernoulli missingness block, whose covariate
// depends on theta through the posterior entropy.
//
//   Q(theta) = sum_j sum_i w_ij [log pi_i + log phi_i(y_j)]
//            + sum_j [m_j eta_j - log(1 + exp(eta_j))],
//   eta_j = xi0 + xi1 * covariate(entropy of posterior at y_j under theta)
//
// The gradient in the unconstrained parameterization is analytic.
class QFunction {
 public:
  QFunction(const PartiallyLabeledSample& sample, Matrix responsibilities,
            MissingnessParams xi, EntropyCovariate mode, CovarianceMode cov_mode);

  const ThetaTransform& transform() const { return tf_; }
  int dim() const { return tf_.dim(); }

  double value(const GmmParams& theta) const;
  double value_unconstrained(const Vector& v) const;
  // returns Q(unpack(v)) and fills grad with dQ/dv
  double value_and_grad(const Vector& v, Vector& grad) const;

 private:
  double eval(const GmmParams& theta, Vector* grad) const;

  const PartiallyLabeledSample& sample_;
  Matrix resp_;  // n x g, rows sum to 1
  MissingnessParams xi_;
  EntropyCovariate mode_;
  ThetaTransform tf_;
};

// convenience wrapper for a single evaluation
double q_function(const GmmParams& theta, const MissingnessParams& xi,
                  const Matrix& responsibilities, const PartiallyLabeledSample& sample,
                  EntropyCovariate mode = EntropyCovariate::log_entropy);

}  // namespace gmmssl
