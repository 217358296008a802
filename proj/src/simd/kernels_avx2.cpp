// AVX2 + FMA variants. This file is compiled with -mavx2 -mfma and must only
// be entered after the dispatcher has confirmed CPU support.

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "timepred/simd/kernels.hpp"

namespace timepred::simd {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline __m256i tail_mask(std::size_t rem) {
  alignas(32) static const std::int64_t table[8] = {-1, -1, -1, -1, 0, 0, 0, 0};
  return _mm256_loadu_si256(reinterpret_cast<const __m256i*>(table + 4 - rem));
}

// exp on four lanes: Cody-Waite reduction x = n ln2 + r, |r| <= ln2/2, then a
// degree-13 Taylor polynomial (truncation error below 1e-17 relative).
// Inputs below -708 flush to zero; inputs above 709 saturate.
inline __m256d exp4(__m256d x) {
  const __m256d lo_cut = _mm256_set1_pd(-708.0);
  const __m256d underflow = _mm256_cmp_pd(x, lo_cut, _CMP_LT_OQ);
  x = _mm256_max_pd(x, lo_cut);
  x = _mm256_min_pd(x, _mm256_set1_pd(709.0));

  const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(1.4426950408889634)),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, _mm256_set1_pd(6.93145751953125e-1), x);
  r = _mm256_fnmadd_pd(n, _mm256_set1_pd(1.42860682030941723212e-6), r);

  __m256d p = _mm256_set1_pd(1.0 / 6227020800.0);
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 479001600.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 39916800.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 3628800.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 362880.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 40320.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 5040.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 720.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 120.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 24.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 6.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(0.5));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));

  // 2^n through the exponent field; n is within [-1022, 1023] after clamping.
  const __m128i n32 = _mm256_cvtpd_epi32(n);
  __m256i bits = _mm256_cvtepi32_epi64(n32);
  bits = _mm256_slli_epi64(_mm256_add_epi64(bits, _mm256_set1_epi64x(1023)), 52);
  const __m256d result = _mm256_mul_pd(p, _mm256_castsi256_pd(bits));
  return _mm256_andnot_pd(underflow, result);
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 8 <= n; k += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k + 4), _mm256_loadu_pd(b + k + 4), acc1);
  }
  if (k + 4 <= n) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k), acc0);
    k += 4;
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; k < n; ++k) s += a[k] * b[k];
  return s;
}

double squared_distance_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d diff = _mm256_sub_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k));
    acc = _mm256_fmadd_pd(diff, diff, acc);
  }
  double s = hsum(acc);
  for (; k < n; ++k) {
    const double diff = a[k] - b[k];
    s += diff * diff;
  }
  return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    _mm256_storeu_pd(y + k, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + k), _mm256_loadu_pd(y + k)));
  }
  for (; k < n; ++k) y[k] += alpha * x[k];
}

double rbf_row_sum_avx2(const double* cols, std::size_t stride, std::size_t d, const double* xi,
                        std::size_t begin, std::size_t end, double gamma) {
  const __m256d neg_gamma = _mm256_set1_pd(-gamma);
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t j = begin;
  for (; j + 8 <= end; j += 8) {
    __m256d a0 = _mm256_setzero_pd(), a1 = _mm256_setzero_pd();
    const double* col = cols + j;
    for (std::size_t k = 0; k < d; ++k, col += stride) {
      const __m256d v = _mm256_broadcast_sd(xi + k);
      const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(col), v);
      const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(col + 4), v);
      a0 = _mm256_fmadd_pd(d0, d0, a0);
      a1 = _mm256_fmadd_pd(d1, d1, a1);
    }
    acc0 = _mm256_add_pd(acc0, exp4(_mm256_mul_pd(neg_gamma, a0)));
    acc1 = _mm256_add_pd(acc1, exp4(_mm256_mul_pd(neg_gamma, a1)));
  }
  for (; j < end; j += 4) {
    const std::size_t rem = std::min<std::size_t>(4, end - j);
    const __m256i mask = tail_mask(rem);
    __m256d a0 = _mm256_setzero_pd();
    const double* col = cols + j;
    for (std::size_t k = 0; k < d; ++k, col += stride) {
      const __m256d d0 = _mm256_sub_pd(_mm256_maskload_pd(col, mask), _mm256_broadcast_sd(xi + k));
      a0 = _mm256_fmadd_pd(d0, d0, a0);
    }
    const __m256d e = exp4(_mm256_mul_pd(neg_gamma, a0));
    acc0 = _mm256_add_pd(acc0, _mm256_and_pd(e, _mm256_castsi256_pd(mask)));
  }
  return hsum(_mm256_add_pd(acc0, acc1));
}

double l2_from_prefix_avx2(const double* sum_lo, const double* sum_hi, const double* sq_lo,
                           const double* sq_hi, std::size_t d, double n) {
  const __m256d inv_n = _mm256_set1_pd(1.0 / n);
  __m256d acc = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= d; k += 4) {
    const __m256d s = _mm256_sub_pd(_mm256_loadu_pd(sum_hi + k), _mm256_loadu_pd(sum_lo + k));
    const __m256d q = _mm256_sub_pd(_mm256_loadu_pd(sq_hi + k), _mm256_loadu_pd(sq_lo + k));
    acc = _mm256_add_pd(acc, _mm256_fnmadd_pd(_mm256_mul_pd(s, s), inv_n, q));
  }
  double c = hsum(acc);
  for (; k < d; ++k) {
    const double s = sum_hi[k] - sum_lo[k];
    c += (sq_hi[k] - sq_lo[k]) - s * s / n;
  }
  return c;
}

void exp_inplace_avx2(double* x, std::size_t n) {
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) _mm256_storeu_pd(x + k, exp4(_mm256_loadu_pd(x + k)));
  for (; k < n; ++k) x[k] = std::exp(x[k]);
}

}  // namespace

const KernelTable& avx2_kernel_table() {
  static const KernelTable table{
      Isa::Avx2,        dot_avx2,           squared_distance_avx2, axpy_avx2,
      rbf_row_sum_avx2, l2_from_prefix_avx2, exp_inplace_avx2,
  };
  return table;
}

}  // namespace timepred::simd
