#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "gmmssl/kernels/kernels.hpp"
#include "gmmssl/rng.hpp"

using gmmssl::Rng;
namespace kn = gmmssl::kernels;

namespace {

std::vector<const kn::Ops*> all_tables() {
  std::vector<const kn::Ops*> t{&kn::scalar()};
  if (const kn::Ops* a = kn::avx2()) t.push_back(a);
  return t;
}

// relative agreement, with an absolute escape hatch around zero/denormals
bool close(double a, double b, double rel, double abs = 1e-307) {
  if (std::isnan(a) && std::isnan(b)) return true;
  if (a == b) return true;  // covers +-inf
  double diff = std::fabs(a - b);
  return diff <= abs || diff <= rel * std::max(std::fabs(a), std::fabs(b));
}

std::vector<double> random_vec(Rng& rng, std::size_t n, double lo, double hi) {
  std::vector<double> v(n);
  for (auto& x : v) x = lo + (hi - lo) * rng.uniform();
  return v;
}

}  // namespace

TEST_CASE("reductions match a long-double oracle on every table") {
  Rng rng(42);
  for (std::size_t n : {1u, 3u, 4u, 7u, 64u, 1001u}) {
    auto x = random_vec(rng, n, -10.0, 10.0);
    auto y = random_vec(rng, n, -10.0, 10.0);
    long double s = 0, d = 0;
    double m = x[0];
    for (std::size_t i = 0; i < n; ++i) {
      s += x[i];
      d += (long double)x[i] * y[i];
      m = std::max(m, x[i]);
    }
    for (const kn::Ops* ops : all_tables()) {
      CAPTURE(ops->name);
      CHECK(close(ops->sum(x.data(), n), (double)s, 1e-12, 1e-12));
      CHECK(close(ops->dot(x.data(), y.data(), n), (double)d, 1e-12, 1e-12));
      CHECK(ops->max(x.data(), n) == m);
    }
  }
}

TEST_CASE("axpy and sub agree across tables") {
  Rng rng(7);
  auto x = random_vec(rng, 137, -5.0, 5.0);
  auto y0 = random_vec(rng, 137, -5.0, 5.0);
  for (const kn::Ops* ops : all_tables()) {
    CAPTURE(ops->name);
    auto y = y0;
    ops->axpy(0.37, x.data(), y.data(), x.size());
    std::vector<double> z(x.size());
    ops->sub(y.data(), y0.data(), z.data(), x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      CHECK(y[i] == doctest::Approx(y0[i] + 0.37 * x[i]).epsilon(1e-14));
      CHECK(z[i] == doctest::Approx(0.37 * x[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("vector exp matches libm to a few ulps") {
  Rng rng(123);
  std::vector<double> x = random_vec(rng, 4096, -700.0, 700.0);
  auto near0 = random_vec(rng, 512, -1.0, 1.0);
  x.insert(x.end(), near0.begin(), near0.end());
  double edge[] = {0.0,
                   -0.0,
                   1.0,
                   -1.0,
                   709.0,
                   709.9,
                   -708.0,
                   -709.0,
                   -745.0,
                   -800.0,
                   1000.0,
                   std::numeric_limits<double>::infinity(),
                   -std::numeric_limits<double>::infinity(),
                   std::numeric_limits<double>::quiet_NaN()};
  x.insert(x.end(), std::begin(edge), std::end(edge));

  std::vector<double> out(x.size());
  for (const kn::Ops* ops : all_tables()) {
    CAPTURE(ops->name);
    ops->exp(x.data(), out.data(), x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      CAPTURE(x[i]);
      CHECK(close(out[i], std::exp(x[i]), 1e-13, 1e-305));
    }
  }
}

TEST_CASE("vector log matches libm to a few ulps") {
  Rng rng(321);
  std::vector<double> x;
  for (int i = 0; i < 4096; ++i) x.push_back(std::exp(-700.0 + 1400.0 * Rng(i).uniform()));
  auto near1 = random_vec(rng, 512, 0.5, 2.0);
  x.insert(x.end(), near1.begin(), near1.end());
  double edge[] = {1.0,
                   0.0,
                   -0.0,
                   1e-300,
                   5e-324,  // denormal
                   1e-320,
                   std::numeric_limits<double>::min(),
                   std::numeric_limits<double>::max(),
                   -1.0,
                   std::numeric_limits<double>::infinity(),
                   std::numeric_limits<double>::quiet_NaN()};
  x.insert(x.end(), std::begin(edge), std::end(edge));

  std::vector<double> out(x.size());
  for (const kn::Ops* ops : all_tables()) {
    CAPTURE(ops->name);
    ops->log(x.data(), out.data(), x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      CAPTURE(x[i]);
      CHECK(close(out[i], std::log(x[i]), 1e-13, 1e-13));
    }
  }
}

TEST_CASE("softplus and logistic are stable and table-equivalent") {
  Rng rng(99);
  std::vector<double> x = random_vec(rng, 4096, -60.0, 60.0);
  double edge[] = {0.0, -0.0, 36.8, -36.8, 745.0, -745.0, 1e4, -1e4,
                   std::numeric_limits<double>::infinity(),
                   -std::numeric_limits<double>::infinity(),
                   std::numeric_limits<double>::quiet_NaN()};
  x.insert(x.end(), std::begin(edge), std::end(edge));

  std::vector<double> sp(x.size()), lg(x.size());
  for (const kn::Ops* ops : all_tables()) {
    CAPTURE(ops->name);
    ops->softplus(x.data(), sp.data(), x.size());
    ops->logistic(x.data(), lg.data(), x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      CAPTURE(x[i]);
      double v = x[i];
      double sp_ref =
          v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
      double t = std::exp(-std::fabs(v));
      double lg_ref = v >= 0.0 ? 1.0 / (1.0 + t) : t / (1.0 + t);
      CHECK(close(sp[i], sp_ref, 1e-13, 1e-305));
      CHECK(close(lg[i], lg_ref, 1e-13, 1e-305));
      if (!std::isnan(v)) {
        CHECK(lg[i] >= 0.0);
        CHECK(lg[i] <= 1.0);
        CHECK(sp[i] >= 0.0);
      }
    }
  }
}

TEST_CASE("gauss1d equals the quadratic it claims") {
  Rng rng(5);
  auto x = random_vec(rng, 1023, -8.0, 8.0);
  std::vector<double> out(x.size());
  for (const kn::Ops* ops : all_tables()) {
    CAPTURE(ops->name);
    ops->gauss1d(x.data(), 1.25, 0.5, -0.9, out.data(), x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      double d = x[i] - 1.25;
      CHECK(out[i] == doctest::Approx(-0.9 - 0.25 * d * d).epsilon(1e-14));
    }
  }
}

TEST_CASE("active table resolves to a real table") {
  const kn::Ops& ops = kn::active();
  double v[3] = {1.0, 2.0, 3.0};
  CHECK(ops.sum(v, 3) == doctest::Approx(6.0));
}
