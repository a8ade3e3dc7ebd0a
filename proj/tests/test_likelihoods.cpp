#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <optional>
#include <vector>

#include "gmmssl/core_model.hpp"
#include "gmmssl/errors.hpp"
#include "gmmssl/likelihoods.hpp"
#include "gmmssl/qfunction.hpp"
#include "gmmssl/rng.hpp"

using namespace gmmssl;

namespace {

GmmParams random_model(Rng& rng, int g, int p, CovarianceMode mode) {
  Vector pi(g);
  for (int i = 0; i < g; ++i) pi[i] = 0.05 + rng.uniform();
  pi /= pi.sum();
  std::vector<Vector> mu(g);
  for (auto& m : mu) {
    m.resize(p);
    for (int c = 0; c < p; ++c) m[c] = 6.0 * rng.uniform() - 3.0;
  }
  std::vector<Matrix> sigma;
  for (int i = 0; i < (mode == CovarianceMode::common ? 1 : g); ++i) {
    Matrix b(p, p);
    for (int r = 0; r < p; ++r) {
      for (int c = 0; c < p; ++c) b(r, c) = rng.normal();
    }
    Matrix s = b * b.transpose() + (0.3 + rng.uniform()) * Matrix::Identity(p, p);
    sigma.push_back(0.5 * (s + s.transpose()));
  }
  return GmmParams::make(pi, mu, sigma, mode);
}

PartiallyLabeledSample random_sample(Rng& rng, int n, int g, int p) {
  RowMatrix y(n, p);
  std::vector<std::optional<int>> labels(n);
  for (int j = 0; j < n; ++j) {
    for (int c = 0; c < p; ++c) y(j, c) = 8.0 * rng.uniform() - 4.0;
    if (rng.bernoulli(0.6)) labels[j] = 1 + static_cast<int>(rng.uniform() * g);
  }
  return PartiallyLabeledSample::make(y, labels);
}

}  // namespace

TEST_CASE("classified and unclassified terms match longhand sums") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int g = 2 + static_cast<int>(rng.uniform() * 3);
    const int p = 1 + static_cast<int>(rng.uniform() * 3);
    const auto mode =
        rng.bernoulli(0.5) ? CovarianceMode::common : CovarianceMode::unequal;
    const GmmParams theta = random_model(rng, g, p, mode);
    const PartiallyLabeledSample sample = random_sample(rng, 30, g, p);

    double classified = 0.0, unclassified = 0.0;
    for (int j = 0; j < sample.n(); ++j) {
      const Vector row = sample.y.row(j).transpose();
      if (sample.is_labeled(j)) {
        const int z = sample.label(j) - 1;
        classified += std::log(theta.pi[z]) +
                      log_gaussian_pdf(row, theta.mu[z], theta.sigma_of(z));
      } else {
        unclassified += mixture_logpdf(row, theta);
      }
    }
    CHECK(log_lik_classified(sample, theta) ==
          doctest::Approx(classified).epsilon(1e-12));
    CHECK(log_lik_unclassified(sample, theta) ==
          doctest::Approx(unclassified).epsilon(1e-12));
    CHECK(log_lik_ignore(sample, theta) ==
          doctest::Approx(classified + unclassified).epsilon(1e-12));
  }
}

TEST_CASE("full likelihood is exactly the ignore and missingness terms added") {
  Rng rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    const int g = 2 + static_cast<int>(rng.uniform() * 3);
    const int p = 1 + static_cast<int>(rng.uniform() * 3);
    const auto mode =
        rng.bernoulli(0.5) ? CovarianceMode::common : CovarianceMode::unequal;
    const FullParams psi{random_model(rng, g, p, mode),
                         {2.0 * rng.uniform() - 1.0, 4.0 * rng.uniform() - 2.0}};
    const PartiallyLabeledSample sample = random_sample(rng, 25, g, p);
    const auto cov = rng.bernoulli(0.5) ? EntropyCovariate::log_entropy
                                        : EntropyCovariate::raw_entropy;
    // composed as a literal sum, so equality is exact
    CHECK(log_lik_full(sample, psi, cov) ==
          log_lik_ignore(sample, psi.theta) + log_lik_miss(sample, psi, cov));
  }
}

TEST_CASE("MCAR missingness block has the closed binomial form") {
  Rng rng(31);
  const GmmParams theta = random_model(rng, 2, 2, CovarianceMode::common);
  const PartiallyLabeledSample sample = random_sample(rng, 50, 2, 2);
  const int n_miss = sample.n() - sample.n_labeled();
  for (double xi0 : {-1.5, 0.0, 0.8}) {
    const FullParams psi{theta, {xi0, 0.0}};
    const double q = 1.0 / (1.0 + std::exp(-xi0));
    const double expected =
        n_miss * std::log(q) + sample.n_labeled() * std::log1p(-q);
    CHECK(log_lik_miss(sample, psi) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("labels beyond g are rejected") {
  RowMatrix y(2, 1);
  y << 0.0, 1.0;
  std::vector<std::optional<int>> labels{3, std::nullopt};
  const auto sample = PartiallyLabeledSample::make(y, labels);
  Rng rng(1);
  const GmmParams theta = random_model(rng, 2, 1, CovarianceMode::common);
  CHECK_THROWS_AS(log_lik_classified(sample, theta), Error);
}

TEST_CASE("Q with indicator responsibilities on labeled data is the full loglik") {
  // with every row labeled the surrogate's mixture block collapses to the
  // classified likelihood, so Q equals the full log likelihood itself
  Rng rng(47);
  const int g = 3, p = 2;
  const GmmParams theta = random_model(rng, g, p, CovarianceMode::unequal);
  RowMatrix y(20, p);
  std::vector<std::optional<int>> labels(20);
  Matrix resp = Matrix::Zero(20, g);
  for (int j = 0; j < 20; ++j) {
    for (int c = 0; c < p; ++c) y(j, c) = 6.0 * rng.uniform() - 3.0;
    const int z = 1 + static_cast<int>(rng.uniform() * g);
    labels[j] = z;
    resp(j, z - 1) = 1.0;
  }
  const auto sample = PartiallyLabeledSample::make(y, labels);
  const MissingnessParams xi{-0.3, 0.7};

  const double q = q_function(theta, xi, resp, sample);
  const double ll = log_lik_full(sample, {theta, xi});
  CHECK(q == doctest::Approx(ll).epsilon(1e-12));
}
