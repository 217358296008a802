#pragma once

#include <cstddef>

namespace timepred::simd {

enum class Isa { Scalar, Avx2, Avx512 };

const char* to_string(Isa isa);

/// Data-parallel inner loops used by the cost functions and the predictor.
/// Every ISA-specific table must agree with the scalar reference within
/// floating-point reassociation error (see tests/unit/test_simd.cpp).
struct KernelTable {
  Isa isa;

  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*squared_distance)(const double* a, const double* b, std::size_t n);
  /// y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);

  /// Sum over j in [begin, end) of exp(-gamma * ||xi - x_j||^2). Samples are
  /// stored column-major: coordinate k of sample j is cols[k * stride + j].
  double (*rbf_row_sum)(const double* cols, std::size_t stride, std::size_t d, const double* xi,
                        std::size_t begin, std::size_t end, double gamma);

  /// Sum over dimensions of (sq_hi - sq_lo) - (sum_hi - sum_lo)^2 / n, i.e. the
  /// within-segment squared deviation from prefix sums. Not clamped.
  double (*l2_from_prefix)(const double* sum_lo, const double* sum_hi, const double* sq_lo,
                           const double* sq_hi, std::size_t d, double n);

  /// x[k] = exp(x[k]) in place.
  void (*exp_inplace)(double* x, std::size_t n);
};

const KernelTable& scalar_kernels();

/// nullptr when the binary was built without AVX2 support or the CPU lacks it.
const KernelTable* avx2_kernels();
/// AVX-512F variant; same availability rule.
const KernelTable* avx512_kernels();

/// The table chosen at first use: the widest supported ISA, unless the
/// TIMEPRED_SIMD environment variable caps it at "scalar" or "avx2".
const KernelTable& kernels();

/// Overrides the active table. Returns false if the ISA is unavailable.
bool select_isa(Isa isa);

Isa active_isa();

}  // namespace timepred::simd
