#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <optional>
#include <vector>

#include "gmmssl/core_model.hpp"
#include "gmmssl/errors.hpp"
#include "gmmssl/evaluate.hpp"
#include "gmmssl/fit.hpp"
#include "gmmssl/simulate.hpp"

using namespace gmmssl;

namespace {

constexpr double kPhiM05 = 0.30853753872598689;  // Phi(-0.5)
constexpr double kPhiM10 = 0.15865525393145705;  // Phi(-1)
constexpr double kPhiM15 = 0.066807201268858071; // Phi(-1.5)

GmmParams two_class_1d(double gap, double pi1 = 0.5) {
  Vector pi(2);
  pi << pi1, 1.0 - pi1;
  Vector m1(1), m2(1);
  m1 << 0.0;
  m2 << gap;
  return GmmParams::make(pi, {m1, m2}, {Matrix::Identity(1, 1)},
                         CovarianceMode::common);
}

double mc_se(double p, long n) { return std::sqrt(p * (1.0 - p) / double(n)); }

}  // namespace

TEST_CASE("error rate counts misclassified rows") {
  const GmmParams theta = two_class_1d(4.0);
  RowMatrix y(3, 1);
  y << 0.0, 4.0, 2.2;  // boundary at 2, so 2.2 goes to class 2
  CHECK(erate(y, {1, 2, 2}, theta) == 0.0);
  CHECK(erate(y, {1, 2, 1}, theta) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(erate(y, {2, 1, 1}, theta) == 1.0);
  CHECK_THROWS_AS(erate(y, {1, 2}, theta), Error);
  CHECK_THROWS_AS(erate(RowMatrix(0, 1), {}, theta), Error);
}

TEST_CASE("two-class error rates of flipped labelings sum to one") {
  const GmmParams theta = two_class_1d(1.5);
  const MixtureDraw draw = rmix(500, theta, 3);
  std::vector<int> flipped(500);
  for (int j = 0; j < 500; ++j) flipped[j] = 3 - draw.labels[j];
  const double a = erate(draw.y, draw.labels, theta);
  const double b = erate(draw.y, flipped, theta);
  CHECK(a + b == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("error rate is invariant under consistent relabeling") {
  Vector pi(3);
  pi << 0.2, 0.3, 0.5;
  Vector m1(1), m2(1), m3(1);
  m1 << 0.0;
  m2 << 3.0;
  m3 << 6.0;
  Matrix s = Matrix::Identity(1, 1);
  const GmmParams theta =
      GmmParams::make(pi, {m1, m2, m3}, {s, s, s}, CovarianceMode::unequal);
  const MixtureDraw draw = rmix(400, theta, 8);

  const int perm[3] = {2, 0, 1};  // new class i+1 holds old class perm[i]+1
  Vector pi2(3);
  std::vector<Vector> mu2(3);
  std::vector<Matrix> sg2(3);
  for (int i = 0; i < 3; ++i) {
    pi2[i] = theta.pi[perm[i]];
    mu2[i] = theta.mu[perm[i]];
    sg2[i] = theta.sigma[perm[i]];
  }
  const GmmParams theta2 = GmmParams::make(pi2, mu2, sg2, CovarianceMode::unequal);
  int to_new[3];
  for (int i = 0; i < 3; ++i) to_new[perm[i]] = i + 1;
  std::vector<int> labels2(400);
  for (int j = 0; j < 400; ++j) labels2[j] = to_new[draw.labels[j] - 1];

  CHECK(erate(draw.y, draw.labels, theta) == erate(draw.y, labels2, theta2));
}

TEST_CASE("conditional error of the true rule matches the normal tail") {
  const GmmParams theta = two_class_1d(2.0);
  const long n_mc = 400000;
  const double est = mc_conditional_error(theta, theta, n_mc, 17);
  CHECK(std::fabs(est - kPhiM10) < 4.0 * mc_se(kPhiM10, n_mc));
  CHECK(mc_conditional_error(theta, theta, n_mc, 17) == est);  // same stream
}

TEST_CASE("a shifted rule pays the closed-form penalty") {
  const GmmParams truth = two_class_1d(2.0);
  Vector m1(1), m2(1);
  m1 << 0.5;
  m2 << 2.5;  // boundary moves from 1 to 1.5
  const GmmParams shifted = GmmParams::make(truth.pi, {m1, m2}, {truth.sigma[0]},
                                            CovarianceMode::common);
  const long n_mc = 400000;
  const double expected = 0.5 * (kPhiM15 + kPhiM05);
  const double opt = mc_conditional_error(truth, truth, n_mc, 29);
  const double est = mc_conditional_error(shifted, truth, n_mc, 29);
  CHECK(std::fabs(est - expected) < 4.0 * mc_se(expected, n_mc));
  CHECK(est > opt);  // same draws, so the gap is far outside the noise
}

TEST_CASE("conditional error decreases as the classes separate") {
  const long n_mc = 300000;
  double last = 1.0;
  const double closed[3] = {kPhiM05 * 2.0 - kPhiM05, kPhiM10, kPhiM15};
  const double gaps[3] = {1.0, 2.0, 3.0};
  for (int i = 0; i < 3; ++i) {
    const GmmParams theta = two_class_1d(gaps[i]);
    const double est = mc_conditional_error(theta, theta, n_mc, 101 + i);
    const double want = i == 0 ? kPhiM05 : closed[i];
    CHECK(std::fabs(est - want) < 4.0 * mc_se(want, n_mc));
    CHECK(est < last);
    last = est;
  }
}

TEST_CASE("conditional error rejects bad arguments") {
  const GmmParams theta = two_class_1d(2.0);
  CHECK_THROWS_AS(mc_conditional_error(theta, theta, 0, 1), Error);
  Vector pi(2);
  pi << 0.5, 0.5;
  Vector m1(2), m2(2);
  m1 << 0.0, 0.0;
  m2 << 2.0, 0.0;
  const GmmParams theta2d =
      GmmParams::make(pi, {m1, m2}, {Matrix::Identity(2, 2)}, CovarianceMode::common);
  CHECK_THROWS_AS(mc_conditional_error(theta2d, theta, 1000, 1), Error);
}

TEST_CASE("cross-validation agrees with an explicit fold loop") {
  RowMatrix y(16, 1);
  y << -0.8, -0.3, 0.1, 0.5, 0.9, 1.3, 4.6, -1.1,  // class 1, one straggler
      8.2, 7.5, 9.1, 8.8, 9.5, 7.9, 3.9, 10.2;     // class 2, one straggler
  std::vector<int> truth(16, 1);
  for (int j = 8; j < 16; ++j) truth[j] = 2;
  std::vector<std::optional<int>> labels(16);
  for (int j = 0; j < 16; ++j) labels[j] = truth[j];
  const auto sample = PartiallyLabeledSample::make(y, labels);

  FitConfig cfg;
  cfg.fit_type = FitType::com;
  cfg.ncov = CovarianceMode::unequal;
  const LoocvResult res = loocv_error(sample, truth, 2, cfg);
  CHECK(res.folds == 16);
  CHECK(res.failed_folds == 0);

  int wrong = 0;
  for (int hold = 0; hold < 16; ++hold) {
    RowMatrix ty(15, 1);
    std::vector<std::optional<int>> tl(15);
    int at = 0;
    for (int j = 0; j < 16; ++j) {
      if (j == hold) continue;
      ty.row(at) = y.row(j);
      tl[at] = truth[j];
      ++at;
    }
    const auto train = PartiallyLabeledSample::make(ty, tl);
    const FitReport rep = fit_complete(train, cfg, 2);
    const int pred = bayes_classify_point(y.row(hold).transpose(), rep.theta);
    CHECK(res.predicted[hold] == pred);
    wrong += pred != truth[hold];
  }
  CHECK(res.error_rate == doctest::Approx(wrong / 16.0).epsilon(1e-15));
  CHECK(wrong >= 2);  // both stragglers land on the wrong side of every fold fit
}

TEST_CASE("cross-validation on separated clusters reproduces the plug-in rate") {
  const GmmParams theta = two_class_1d(12.0);
  const MixtureDraw draw = rmix(20, theta, 91);
  const PartiallyLabeledSample sample = with_labels(draw);

  FitConfig cfg;
  cfg.fit_type = FitType::com;
  cfg.ncov = CovarianceMode::common;
  const LoocvResult res = loocv_error(sample, draw.labels, 2, cfg);
  CHECK(res.failed_folds == 0);
  CHECK(res.error_rate == 0.0);

  const FitReport full = fit_complete(sample, cfg, 2);
  CHECK(erate(draw.y, draw.labels, full.theta) == res.error_rate);
}

TEST_CASE("folds that cannot be fitted are counted, not scored") {
  RowMatrix y(6, 1);
  y << 0.0, 0.1, 0.2, 0.3, 9.0, 11.0;
  const std::vector<int> truth{1, 1, 1, 1, 2, 2};
  std::vector<std::optional<int>> labels(6);
  for (int j = 0; j < 6; ++j) labels[j] = truth[j];
  const auto sample = PartiallyLabeledSample::make(y, labels);

  FitConfig cfg;
  cfg.fit_type = FitType::com;
  cfg.ncov = CovarianceMode::unequal;
  // holding out either class-2 row leaves a singleton with zero variance
  const LoocvResult res = loocv_error(sample, truth, 2, cfg);
  CHECK(res.folds == 6);
  CHECK(res.failed_folds == 2);
  CHECK(res.predicted[4] == 0);
  CHECK(res.predicted[5] == 0);
  CHECK(res.error_rate == 0.0);  // the four class-1 folds all classify correctly
}

TEST_CASE("cross-validation is thread-count invariant") {
  const GmmParams theta = two_class_1d(3.0);
  const MixtureDraw draw = rmix(24, theta, 5);
  const std::vector<int> miss = rlabel(draw.y, {theta, {-0.5, 1.0}}, 6);
  const PartiallyLabeledSample sample = mask_labels(draw, miss);

  FitConfig cfg;
  cfg.fit_type = FitType::ign;
  cfg.ncov = CovarianceMode::common;
  cfg.seed = 13;
  const LoocvResult a = loocv_error(sample, draw.labels, 2, cfg, 1);
  const LoocvResult b = loocv_error(sample, draw.labels, 2, cfg, 3);
  CHECK(a.predicted == b.predicted);
  CHECK(a.failed_folds == b.failed_folds);
  CHECK(a.error_rate == b.error_rate);
  for (int j = 0; j < 24; ++j) {
    if (a.predicted[j] != 0) {
      CHECK(a.predicted[j] >= 1);
      CHECK(a.predicted[j] <= 2);
    }
  }
}

TEST_CASE("cross-validation validates the truth labels") {
  RowMatrix y(3, 1);
  y << 0.0, 1.0, 2.0;
  std::vector<std::optional<int>> labels{1, 2, 1};
  const auto sample = PartiallyLabeledSample::make(y, labels);
  FitConfig cfg;
  CHECK_THROWS_AS(loocv_error(sample, {1, 2, 3}, 2, cfg), Error);
  CHECK_THROWS_AS(loocv_error(sample, {1, 2}, 2, cfg), Error);
}

TEST_CASE("relative efficiency replicates are reproducible and consistent") {
  const GmmParams truth = two_class_1d(2.0);
  EfficiencyOptions opts;
  opts.n_reps = 4;
  opts.n_mc_err = 20000;
  opts.n_mc_opt = 60000;
  opts.fit.ncov = CovarianceMode::common;

  const EfficiencyResult res =
      empirical_relative_efficiency(truth, {-0.5, 1.0}, 120, 7, opts);
  CHECK(res.replicates.size() == 4);
  CHECK(std::fabs(res.err_opt - kPhiM10) < 4.0 * mc_se(kPhiM10, opts.n_mc_opt));
  REQUIRE(res.n_used >= 1);

  double sum_com = 0.0, sum_full = 0.0;
  for (const auto& rep : res.replicates) {
    if (!rep.ok) continue;
    // an estimated rule cannot beat the optimal one beyond MC noise
    CHECK(rep.err_com > res.err_opt - 4.0 * mc_se(kPhiM10, opts.n_mc_err));
    CHECK(rep.err_ign > res.err_opt - 4.0 * mc_se(kPhiM10, opts.n_mc_err));
    CHECK(rep.err_full > res.err_opt - 4.0 * mc_se(kPhiM10, opts.n_mc_err));
    CHECK(rep.err_com < 0.5);
    sum_com += rep.err_com - res.err_opt;
    sum_full += rep.err_full - res.err_opt;
  }
  CHECK(res.mean_excess_com ==
        doctest::Approx(sum_com / res.n_used).epsilon(1e-12));
  CHECK(res.mean_excess_full ==
        doctest::Approx(sum_full / res.n_used).epsilon(1e-12));
  CHECK(res.ere_full_mean ==
        doctest::Approx(res.mean_excess_com / res.mean_excess_full).epsilon(1e-12));
  CHECK(res.ere_ign_median ==
        doctest::Approx(res.median_excess_com / res.median_excess_ign).epsilon(1e-12));

  opts.threads = 3;
  const EfficiencyResult again =
      empirical_relative_efficiency(truth, {-0.5, 1.0}, 120, 7, opts);
  CHECK(again.err_opt == res.err_opt);
  CHECK(again.n_used == res.n_used);
  for (int r = 0; r < 4; ++r) {
    CHECK(again.replicates[r].ok == res.replicates[r].ok);
    CHECK(again.replicates[r].err_com == res.replicates[r].err_com);
    CHECK(again.replicates[r].err_full == res.replicates[r].err_full);
  }
}
