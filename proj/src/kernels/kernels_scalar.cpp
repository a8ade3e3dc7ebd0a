#include <cmath>
#include <cstddef>

#include "gmmssl/kernels/kernels.hpp"

namespace gmmssl::kernels {
namespace {

double sum_scalar(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double max_scalar(const double* x, std::size_t n) {
  double m = x[0];
  for (std::size_t i = 1; i < n; ++i)
    if (x[i] > m) m = x[i];
  return m;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void sub_scalar(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void exp_scalar(const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(x[i]);
}

void log_scalar(const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::log(x[i]);
}

void softplus_scalar(const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    double v = x[i];
    out[i] = v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
  }
}

void logistic_scalar(const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    double t = std::exp(-std::fabs(x[i]));
    out[i] = x[i] >= 0.0 ? 1.0 / (1.0 + t) : t / (1.0 + t);
  }
}

void gauss1d_scalar(const double* x, double mean, double inv_var,
                    double log_norm, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    double d = x[i] - mean;
    out[i] = log_norm - 0.5 * inv_var * d * d;
  }
}

}  // namespace

const Ops& scalar() {
  static const Ops ops = {
      "scalar",        sum_scalar,      dot_scalar, max_scalar,
      axpy_scalar,     sub_scalar,      exp_scalar, log_scalar,
      softplus_scalar, logistic_scalar, gauss1d_scalar,
  };
  return ops;
}

}  // namespace gmmssl::kernels
