// AVX-512F variants. Compiled with -mavx512f; entered only after the
// dispatcher has confirmed CPU support. Kernels without a wider payoff reuse
// the AVX2 entries.

#include <immintrin.h>

#include <cmath>
#include <cstdint>

#include "timepred/simd/kernels.hpp"

namespace timepred::simd {

const KernelTable& avx2_kernel_table();

namespace {

// Same reduction and polynomial as the AVX2 exp; scalef applies 2^n.
inline __m512d exp8(__m512d x) {
  const __m512d lo_cut = _mm512_set1_pd(-708.0);
  const __mmask8 keep = _mm512_cmp_pd_mask(x, lo_cut, _CMP_GE_OQ);
  x = _mm512_max_pd(x, lo_cut);
  x = _mm512_min_pd(x, _mm512_set1_pd(709.0));

  const __m512d n = _mm512_roundscale_pd(_mm512_mul_pd(x, _mm512_set1_pd(1.4426950408889634)),
                                         _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m512d r = _mm512_fnmadd_pd(n, _mm512_set1_pd(6.93145751953125e-1), x);
  r = _mm512_fnmadd_pd(n, _mm512_set1_pd(1.42860682030941723212e-6), r);

  __m512d p = _mm512_set1_pd(1.0 / 6227020800.0);
  p = _mm512_fmadd_pd(p, r, _mm512_set1_pd(1.0 / 479001600.0));
  p = _mm512_fmadd_pd(p, r, _mm512_set1_pd(1.0 / 39916800.0));
  p = _mm512_fmadd_pd(p, r, _mm512_set1_pd(1.0 / 3628800.0));
  p = _mm512_fmadd_pd(p, r, _mm512_set1_pd(1.0 / 362880.0));
  p = _mm512_fmadd_pd(p, r, _mm512_set1_pd(1.0 / 40320.0));
  p = _mm512_fmadd_pd(p, r, _mm512_set1_pd(1.0 / 5040.0));
  p = _mm512_fmadd_pd(p, r, _mm512_set1_pd(1.0 / 720.0));
  p = _mm512_fmadd_pd(p, r, _mm512_set1_pd(1.0 / 120.0));
  p = _mm512_fmadd_pd(p, r, _mm512_set1_pd(1.0 / 24.0));
  p = _mm512_fmadd_pd(p, r, _mm512_set1_pd(1.0 / 6.0));
  p = _mm512_fmadd_pd(p, r, _mm512_set1_pd(0.5));
  p = _mm512_fmadd_pd(p, r, _mm512_set1_pd(1.0));
  p = _mm512_fmadd_pd(p, r, _mm512_set1_pd(1.0));
  return _mm512_maskz_mov_pd(keep, _mm512_scalef_pd(p, n));
}

double rbf_row_sum_avx512(const double* cols, std::size_t stride, std::size_t d, const double* xi,
                          std::size_t begin, std::size_t end, double gamma) {
  const __m512d neg_gamma = _mm512_set1_pd(-gamma);
  __m512d acc0 = _mm512_setzero_pd();
  __m512d acc1 = _mm512_setzero_pd();
  std::size_t j = begin;
  for (; j + 16 <= end; j += 16) {
    __m512d a0 = _mm512_setzero_pd(), a1 = _mm512_setzero_pd();
    const double* col = cols + j;
    for (std::size_t k = 0; k < d; ++k, col += stride) {
      const __m512d v = _mm512_set1_pd(xi[k]);
      const __m512d d0 = _mm512_sub_pd(_mm512_loadu_pd(col), v);
      const __m512d d1 = _mm512_sub_pd(_mm512_loadu_pd(col + 8), v);
      a0 = _mm512_fmadd_pd(d0, d0, a0);
      a1 = _mm512_fmadd_pd(d1, d1, a1);
    }
    acc0 = _mm512_add_pd(acc0, exp8(_mm512_mul_pd(neg_gamma, a0)));
    acc1 = _mm512_add_pd(acc1, exp8(_mm512_mul_pd(neg_gamma, a1)));
  }
  for (; j < end; j += 8) {
    const std::size_t rem = end - j < 8 ? end - j : 8;
    const __mmask8 mask = static_cast<__mmask8>((1u << rem) - 1u);
    __m512d a0 = _mm512_setzero_pd();
    const double* col = cols + j;
    for (std::size_t k = 0; k < d; ++k, col += stride) {
      const __m512d d0 = _mm512_sub_pd(_mm512_maskz_loadu_pd(mask, col), _mm512_set1_pd(xi[k]));
      a0 = _mm512_fmadd_pd(d0, d0, a0);
    }
    acc0 = _mm512_mask_add_pd(acc0, mask, acc0, exp8(_mm512_mul_pd(neg_gamma, a0)));
  }
  return _mm512_reduce_add_pd(_mm512_add_pd(acc0, acc1));
}

void exp_inplace_avx512(double* x, std::size_t n) {
  std::size_t k = 0;
  for (; k + 8 <= n; k += 8) _mm512_storeu_pd(x + k, exp8(_mm512_loadu_pd(x + k)));
  if (k < n) {
    const __mmask8 mask = static_cast<__mmask8>((1u << (n - k)) - 1u);
    _mm512_mask_storeu_pd(x + k, mask, exp8(_mm512_maskz_loadu_pd(mask, x + k)));
  }
}

}  // namespace

const KernelTable& avx512_kernel_table() {
  static const KernelTable table = [] {
    KernelTable t = avx2_kernel_table();
    t.isa = Isa::Avx512;
    t.rbf_row_sum = rbf_row_sum_avx512;
    t.exp_inplace = exp_inplace_avx512;
    return t;
  }();
  return table;
}

}  // namespace timepred::simd
