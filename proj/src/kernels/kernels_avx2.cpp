// AVX2+FMA variants of the kernel table. exp/log use the classic Cephes
// rational approximations after range reduction; accuracy is within a couple
// of ulps of libm, which the equivalence tests pin down.

#include <immintrin.h>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>

#include "gmmssl/kernels/kernels.hpp"

namespace gmmssl::kernels {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(lo) + _mm_cvtsd_f64(_mm_unpackhi_pd(lo, lo));
}

double sum_avx2(const double* x, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
    acc1 = _mm256_add_pd(acc1, _mm256_loadu_pd(x + i + 4));
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += x[i];
  return acc;
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4),
                           _mm256_loadu_pd(y + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

double max_avx2(const double* x, std::size_t n) {
  if (n < 4) {
    double m = x[0];
    for (std::size_t i = 1; i < n; ++i)
      if (x[i] > m) m = x[i];
    return m;
  }
  __m256d vm = _mm256_loadu_pd(x);
  std::size_t i = 4;
  for (; i + 4 <= n; i += 4) vm = _mm256_max_pd(vm, _mm256_loadu_pd(x + i));
  __m128d lo = _mm_max_pd(_mm256_castpd256_pd128(vm),
                          _mm256_extractf128_pd(vm, 1));
  double m = _mm_cvtsd_f64(_mm_max_sd(lo, _mm_unpackhi_pd(lo, lo)));
  for (; i < n; ++i)
    if (x[i] > m) m = x[i];
  return m;
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
  __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void sub_avx2(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i,
                     _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] - b[i];
}

// ------------------------------------------------------------------ exp ----

const __m256d kExpMaxArg = _mm256_set1_pd(709.437);
const __m256d kExpMinArg = _mm256_set1_pd(-708.396418532264106224);
const __m256d kLog2E = _mm256_set1_pd(1.4426950408889634073599);
const __m256d kLn2Hi = _mm256_set1_pd(6.93145751953125e-1);
const __m256d kLn2Lo = _mm256_set1_pd(1.42860682030941723212e-6);
const __m256d kExpP0 = _mm256_set1_pd(1.26177193074810590878e-4);
const __m256d kExpP1 = _mm256_set1_pd(3.02994407707441961300e-2);
const __m256d kExpP2 = _mm256_set1_pd(9.99999999999999999910e-1);
const __m256d kExpQ0 = _mm256_set1_pd(3.00198505138664455042e-6);
const __m256d kExpQ1 = _mm256_set1_pd(2.52448340349684104192e-3);
const __m256d kExpQ2 = _mm256_set1_pd(2.27265548208155028766e-1);
const __m256d kExpQ3 = _mm256_set1_pd(2.00000000000000000005e0);

inline __m256d exp_pd(__m256d x) {
  __m256d too_big = _mm256_cmp_pd(x, kExpMaxArg, _CMP_GT_OQ);
  __m256d too_small = _mm256_cmp_pd(x, kExpMinArg, _CMP_LT_OQ);

  __m256d nd = _mm256_round_pd(_mm256_mul_pd(x, kLog2E),
                               _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(nd, kLn2Hi, x);
  r = _mm256_fnmadd_pd(nd, kLn2Lo, r);
  __m256d r2 = _mm256_mul_pd(r, r);

  __m256d p = _mm256_fmadd_pd(kExpP0, r2, kExpP1);
  p = _mm256_fmadd_pd(p, r2, kExpP2);
  p = _mm256_mul_pd(p, r);
  __m256d q = _mm256_fmadd_pd(kExpQ0, r2, kExpQ1);
  q = _mm256_fmadd_pd(q, r2, kExpQ2);
  q = _mm256_fmadd_pd(q, r2, kExpQ3);
  __m256d e = _mm256_div_pd(p, _mm256_sub_pd(q, p));
  e = _mm256_fmadd_pd(_mm256_set1_pd(2.0), e, _mm256_set1_pd(1.0));

  // scale by 2^n through the exponent field; |n| <= 1024 here
  __m128i n32 = _mm256_cvtpd_epi32(nd);
  __m256i n64 = _mm256_cvtepi32_epi64(n32);
  __m256i bits = _mm256_slli_epi64(_mm256_add_epi64(n64, _mm256_set1_epi64x(1023)), 52);
  e = _mm256_mul_pd(e, _mm256_castsi256_pd(bits));

  e = _mm256_blendv_pd(e, _mm256_setzero_pd(), too_small);
  e = _mm256_blendv_pd(e, _mm256_set1_pd(std::numeric_limits<double>::infinity()),
                       too_big);
  return e;
}

void exp_avx2(const double* x, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, exp_pd(_mm256_loadu_pd(x + i)));
  for (; i < n; ++i) out[i] = std::exp(x[i]);
}

// ------------------------------------------------------------------ log ----

const __m256d kSqrtHalf = _mm256_set1_pd(0.70710678118654752440);
const __m256d kLogP0 = _mm256_set1_pd(1.01875663804580931796e-4);
const __m256d kLogP1 = _mm256_set1_pd(4.97494994976747001425e-1);
const __m256d kLogP2 = _mm256_set1_pd(4.70579119878881725854e0);
const __m256d kLogP3 = _mm256_set1_pd(1.44989225341610930846e1);
const __m256d kLogP4 = _mm256_set1_pd(1.79368678507819816313e1);
const __m256d kLogP5 = _mm256_set1_pd(7.70838733755885391666e0);
const __m256d kLogQ0 = _mm256_set1_pd(1.12873587189167450590e1);
const __m256d kLogQ1 = _mm256_set1_pd(4.52279145837532221105e1);
const __m256d kLogQ2 = _mm256_set1_pd(8.29875266912776603211e1);
const __m256d kLogQ3 = _mm256_set1_pd(7.11544750618563894466e1);
const __m256d kLogQ4 = _mm256_set1_pd(2.31251620126765340583e1);

inline __m256d log_pd(__m256d x) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d inf = _mm256_set1_pd(std::numeric_limits<double>::infinity());

  __m256d is_zero = _mm256_cmp_pd(x, zero, _CMP_EQ_OQ);
  __m256d is_neg = _mm256_cmp_pd(x, zero, _CMP_LT_OQ);
  __m256d is_inf = _mm256_cmp_pd(x, inf, _CMP_EQ_OQ);
  __m256d is_nan = _mm256_cmp_pd(x, x, _CMP_UNORD_Q);

  // lift denormals into the normal range, remember the shift
  __m256d tiny = _mm256_cmp_pd(x, _mm256_set1_pd(2.2250738585072014e-308),
                               _CMP_LT_OQ);
  __m256d scaled = _mm256_mul_pd(x, _mm256_set1_pd(0x1.0p54));
  __m256d xa = _mm256_blendv_pd(x, scaled, tiny);
  __m256d e_shift = _mm256_blendv_pd(zero, _mm256_set1_pd(-54.0), tiny);

  __m256i bits = _mm256_castpd_si256(xa);
  __m256i expo = _mm256_srli_epi64(bits, 52);
  expo = _mm256_and_si256(expo, _mm256_set1_epi64x(0x7ff));
  // biased exponents are small ints living in the low 32 bits of each lane
  __m128i e32 = _mm256_castsi256_si128(_mm256_permutevar8x32_epi32(
      expo, _mm256_setr_epi32(0, 2, 4, 6, 0, 0, 0, 0)));
  // e such that xa = m * 2^e with m in [0.5, 1)
  __m256d e = _mm256_cvtepi32_pd(e32);
  e = _mm256_add_pd(_mm256_sub_pd(e, _mm256_set1_pd(1022.0)), e_shift);

  __m256i mant = _mm256_and_si256(bits, _mm256_set1_epi64x(0x000fffffffffffffLL));
  __m256d m = _mm256_castsi256_pd(
      _mm256_or_si256(mant, _mm256_set1_epi64x(0x3fe0000000000000LL)));

  __m256d below = _mm256_cmp_pd(m, kSqrtHalf, _CMP_LT_OQ);
  e = _mm256_add_pd(e, _mm256_blendv_pd(zero, _mm256_set1_pd(-1.0), below));
  m = _mm256_blendv_pd(m, _mm256_add_pd(m, m), below);

  __m256d z = _mm256_sub_pd(m, _mm256_set1_pd(1.0));
  __m256d z2 = _mm256_mul_pd(z, z);

  __m256d p = _mm256_fmadd_pd(kLogP0, z, kLogP1);
  p = _mm256_fmadd_pd(p, z, kLogP2);
  p = _mm256_fmadd_pd(p, z, kLogP3);
  p = _mm256_fmadd_pd(p, z, kLogP4);
  p = _mm256_fmadd_pd(p, z, kLogP5);
  __m256d q = _mm256_add_pd(z, kLogQ0);
  q = _mm256_fmadd_pd(q, z, kLogQ1);
  q = _mm256_fmadd_pd(q, z, kLogQ2);
  q = _mm256_fmadd_pd(q, z, kLogQ3);
  q = _mm256_fmadd_pd(q, z, kLogQ4);

  __m256d y = _mm256_mul_pd(_mm256_mul_pd(z, z2), _mm256_div_pd(p, q));
  y = _mm256_fmadd_pd(e, _mm256_set1_pd(-2.121944400546905827679e-4), y);
  y = _mm256_fnmadd_pd(_mm256_set1_pd(0.5), z2, y);
  __m256d res = _mm256_add_pd(z, y);
  res = _mm256_fmadd_pd(e, _mm256_set1_pd(0.693359375), res);

  res = _mm256_blendv_pd(res, _mm256_sub_pd(zero, inf), is_zero);
  res = _mm256_blendv_pd(res, inf, is_inf);
  res = _mm256_blendv_pd(res, _mm256_set1_pd(std::numeric_limits<double>::quiet_NaN()),
                         _mm256_or_pd(is_neg, is_nan));
  return res;
}

void log_avx2(const double* x, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, log_pd(_mm256_loadu_pd(x + i)));
  for (; i < n; ++i) out[i] = std::log(x[i]);
}

// ------------------------------------------------- softplus / logistic ----

// log1p(t) for t in [0, 1] via Kahan's correction: log(1+t) * t / ((1+t)-1)
inline __m256d log1p_small_pd(__m256d t) {
  const __m256d one = _mm256_set1_pd(1.0);
  __m256d u = _mm256_add_pd(one, t);
  __m256d d = _mm256_sub_pd(u, one);
  __m256d raw = _mm256_mul_pd(log_pd(u), _mm256_div_pd(t, d));
  __m256d exact = _mm256_cmp_pd(d, _mm256_setzero_pd(), _CMP_EQ_OQ);
  return _mm256_blendv_pd(raw, t, exact);
}

const __m256d kSignMask = _mm256_set1_pd(-0.0);

inline __m256d softplus_pd(__m256d x) {
  __m256d t = exp_pd(_mm256_or_pd(_mm256_andnot_pd(kSignMask, x), kSignMask));
  __m256d res = _mm256_add_pd(_mm256_max_pd(_mm256_setzero_pd(), x),
                              log1p_small_pd(t));
  return res;
}

void softplus_avx2(const double* x, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, softplus_pd(_mm256_loadu_pd(x + i)));
  for (; i < n; ++i) {
    double v = x[i];
    out[i] = v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
  }
}

inline __m256d logistic_pd(__m256d x) {
  const __m256d one = _mm256_set1_pd(1.0);
  __m256d t = exp_pd(_mm256_or_pd(_mm256_andnot_pd(kSignMask, x), kSignMask));
  __m256d u = _mm256_add_pd(one, t);
  __m256d pos = _mm256_div_pd(one, u);
  __m256d neg = _mm256_div_pd(t, u);
  __m256d nonneg = _mm256_cmp_pd(x, _mm256_setzero_pd(), _CMP_GE_OQ);
  return _mm256_blendv_pd(neg, pos, nonneg);
}

void logistic_avx2(const double* x, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, logistic_pd(_mm256_loadu_pd(x + i)));
  for (; i < n; ++i) {
    double t = std::exp(-std::fabs(x[i]));
    out[i] = x[i] >= 0.0 ? 1.0 / (1.0 + t) : t / (1.0 + t);
  }
}

void gauss1d_avx2(const double* x, double mean, double inv_var, double log_norm,
                  double* out, std::size_t n) {
  __m256d vm = _mm256_set1_pd(mean);
  __m256d vh = _mm256_set1_pd(-0.5 * inv_var);
  __m256d vc = _mm256_set1_pd(log_norm);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), vm);
    _mm256_storeu_pd(out + i, _mm256_fmadd_pd(_mm256_mul_pd(d, d), vh, vc));
  }
  for (; i < n; ++i) {
    double d = x[i] - mean;
    out[i] = log_norm - 0.5 * inv_var * d * d;
  }
}

}  // namespace

namespace detail {
const Ops& avx2_ops() {
  static const Ops ops = {
      "avx2",        sum_avx2,      dot_avx2, max_avx2,
      axpy_avx2,     sub_avx2,      exp_avx2, log_avx2,
      softplus_avx2, logistic_avx2, gauss1d_avx2,
  };
  return ops;
}
}  // namespace detail

}  // namespace gmmssl::kernels
