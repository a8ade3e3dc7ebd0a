#pragma once

#include <cstddef>

namespace gmmssl::kernels {

// Dispatch table of the arithmetic inner loops. Every entry has a scalar
// reference implementation; ISA variants must agree with it elementwise to a
// few ulps (enforced by the kernel equivalence tests). Transcendental
// variants follow the usual polynomial range-reduction route, so they are
// close to, but not bit-equal with, libm.
struct Ops {
  const char* name;

  double (*sum)(const double* x, std::size_t n);
  double (*dot)(const double* x, const double* y, std::size_t n);
  double (*max)(const double* x, std::size_t n);  // n >= 1
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  void (*sub)(const double* a, const double* b, double* out, std::size_t n);

  void (*exp)(const double* x, double* out, std::size_t n);
  void (*log)(const double* x, double* out, std::size_t n);
  // log(1 + e^x), stable over the full double range
  void (*softplus)(const double* x, double* out, std::size_t n);
  // 1 / (1 + e^-x), stable over the full double range
  void (*logistic)(const double* x, double* out, std::size_t n);

  // out[i] = log_norm - 0.5 * inv_var * (x[i] - mean)^2
  void (*gauss1d)(const double* x, double mean, double inv_var,
                  double log_norm, double* out, std::size_t n);
};

const Ops& scalar();

// nullptr when the binary was built without AVX2 or the CPU lacks it.
const Ops* avx2();

// Runtime selection: best available ISA, overridable for testing with
// GMMSSL_KERNELS=scalar|avx2. Resolved once per process.
const Ops& active();

}  // namespace gmmssl::kernels
