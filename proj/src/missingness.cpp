#include "gmmssl/missingness.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "gmmssl/core_model.hpp"
#include "gmmssl/errors.hpp"
#include "gmmssl/kernels/kernels.hpp"
#include "gmmssl/scalar_math.hpp"

namespace gmmssl {

double entropy_covariate(double entropy_value, EntropyCovariate mode) {
  if (mode == EntropyCovariate::raw_entropy) return entropy_value;
  return std::log(std::max(entropy_value, kEntropyFloor));
}

double q_prob(const Vector& y, const FullParams& psi, EntropyCovariate mode) {
  const double e = entropy(posterior_point(y, psi.theta));
  return logistic(psi.xi.xi0 + psi.xi.xi1 * entropy_covariate(e, mode));
}

Vector q_prob_batch(const RowMatrix& y, const FullParams& psi, EntropyCovariate mode) {
  Vector ent = posterior_entropy(y, psi.theta);
  Vector out(ent.size());
  const auto& k = kernels::active();
  std::vector<double> eta(ent.size());
  for (Eigen::Index j = 0; j < ent.size(); ++j) {
    eta[j] = psi.xi.xi0 + psi.xi.xi1 * entropy_covariate(ent[j], mode);
  }
  k.logistic(eta.data(), out.data(), eta.size());
  return out;
}

double log_lik_miss(const PartiallyLabeledSample& sample, const FullParams& psi,
                    EntropyCovariate mode) {
  const Vector ent = posterior_entropy(sample.y, psi.theta);
  const auto n = static_cast<size_t>(sample.n());
  std::vector<double> eta(n), sp(n);
  double sum_m_eta = 0.0;
  for (size_t j = 0; j < n; ++j) {
    eta[j] = psi.xi.xi0 + psi.xi.xi1 * entropy_covariate(ent[j], mode);
    if (!sample.is_labeled(j)) sum_m_eta += eta[j];
  }
  const auto& k = kernels::active();
  k.softplus(eta.data(), sp.data(), n);
  return sum_m_eta - k.sum(sp.data(), n);
}

double expected_missing_fraction(const RowMatrix& y, const FullParams& psi,
                                 EntropyCovariate mode) {
  const Vector q = q_prob_batch(y, psi, mode);
  return q.size() == 0 ? 0.0 : q.mean();
}

double logistic_loglik(const Vector& x, const std::vector<int>& response,
                       const MissingnessParams& xi) {
  double ll = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double eta = xi.xi0 + xi.xi1 * x[j];
    ll += (response[j] ? eta : 0.0) - softplus(eta);
  }
  return ll;
}

namespace {

constexpr double kCoefCap = 1e3;
constexpr double kInterceptCap = 30.0;

LogisticFit finish(const Vector& x, const std::vector<int>& response, LogisticFit f) {
  f.loglik = logistic_loglik(x, response, f.xi);
  return f;
}

}  // namespace

LogisticFit fit_logistic(const Vector& x, const std::vector<int>& response,
                         std::optional<MissingnessParams> init) {
  const auto n = x.size();
  if (n < 1 || static_cast<Eigen::Index>(response.size()) != n) {
    throw Error("fit_logistic: covariate and response lengths differ");
  }
  Eigen::Index n1 = 0;
  for (int r : response) {
    if (r != 0 && r != 1) throw Error("fit_logistic: response entries must be 0 or 1");
    n1 += r;
  }

  LogisticFit fit;
  if (n1 == 0 || n1 == n) {
    fit.xi = {n1 == 0 ? -kInterceptCap : kInterceptCap, 0.0};
    fit.degenerate = true;
    return finish(x, response, fit);
  }

  const double x_span = x.maxCoeff() - x.minCoeff();
  if (x_span < 1e-12 * (1.0 + x.cwiseAbs().maxCoeff())) {
    const double pbar = static_cast<double>(n1) / static_cast<double>(n);
    fit.xi = {std::clamp(std::log(pbar / (1.0 - pbar)), -kInterceptCap, kInterceptCap),
              0.0};
    fit.degenerate = true;
    return finish(x, response, fit);
  }

  MissingnessParams beta = init.value_or(MissingnessParams{0.0, 0.0});
  double ll = logistic_loglik(x, response, beta);

  for (int it = 1; it <= 100; ++it) {
    double sw = 0, swx = 0, swxx = 0, sr = 0, srx = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double p = logistic(beta.xi0 + beta.xi1 * x[j]);
      const double w = std::max(p * (1.0 - p), 1e-10);
      const double r = response[j] - p;
      sw += w;
      swx += w * x[j];
      swxx += w * x[j] * x[j];
      sr += r;
      srx += r * x[j];
    }
    const double det = sw * swxx - swx * swx;
    if (!(det > 1e-14 * std::max(1.0, sw * swxx))) break;  // weighted design collapsed
    const double d0 = (swxx * sr - swx * srx) / det;
    const double d1 = (sw * srx - swx * sr) / det;

    // Newton step with halving so the likelihood never drops
    double t = 1.0;
    MissingnessParams cand;
    double ll_cand = ll;
    bool improved = false;
    while (t >= 1e-8) {
      cand = {beta.xi0 + t * d0, beta.xi1 + t * d1};
      ll_cand = logistic_loglik(x, response, cand);
      if (ll_cand >= ll - 1e-13) {
        improved = true;
        break;
      }
      t *= 0.5;
    }
    if (!improved) break;

    fit.iterations = it;
    if (std::max(std::abs(cand.xi0), std::abs(cand.xi1)) > kCoefCap) {
      // coefficients diverge while the likelihood keeps climbing: separation
      fit.separated = ll_cand > ll;
      beta = {std::clamp(cand.xi0, -kCoefCap, kCoefCap),
              std::clamp(cand.xi1, -kCoefCap, kCoefCap)};
      break;
    }
    const double change = std::max(std::abs(t * d0), std::abs(t * d1));
    beta = cand;
    ll = ll_cand;
    if (change < 1e-10) break;
  }

  // residuals vanishing everywhere mean the indicators are explained
  // perfectly and the true maximizer lies at infinity: separation
  double worst = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    worst = std::max(worst,
                     std::abs(response[j] - logistic(beta.xi0 + beta.xi1 * x[j])));
  }
  if (worst <= 1e-6) fit.separated = true;

  fit.xi = beta;
  return finish(x, response, fit);
}

}  // namespace gmmssl
