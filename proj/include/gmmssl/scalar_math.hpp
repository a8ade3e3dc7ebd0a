#pragma once

#include <cmath>

namespace gmmssl {

// log(1 + exp(x)) without overflow for large |x|
inline double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

// 1 / (1 + exp(-x)) evaluated from the side that cannot overflow
inline double logistic(double x) {
  if (x >= 0.0) {
    const double t = std::exp(-x);
    return 1.0 / (1.0 + t);
  }
  const double t = std::exp(x);
  return t / (1.0 + t);
}

inline double log_sum_exp(const double* a, int n) {
  double m = a[0];
  for (int i = 1; i < n; ++i) m = std::max(m, a[i]);
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += std::exp(a[i] - m);
  return m + std::log(s);
}

}  // namespace gmmssl
