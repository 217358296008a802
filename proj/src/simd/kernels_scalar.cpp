#include <cmath>

#include "timepred/simd/kernels.hpp"

namespace timepred::simd {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += a[k] * b[k];
  return s;
}

double squared_distance_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double diff = a[k] - b[k];
    s += diff * diff;
  }
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) y[k] += alpha * x[k];
}

double rbf_row_sum_scalar(const double* cols, std::size_t stride, std::size_t d, const double* xi,
                          std::size_t begin, std::size_t end, double gamma) {
  double s = 0.0;
  for (std::size_t j = begin; j < end; ++j) {
    double dist = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      const double diff = cols[k * stride + j] - xi[k];
      dist += diff * diff;
    }
    s += std::exp(-gamma * dist);
  }
  return s;
}

double l2_from_prefix_scalar(const double* sum_lo, const double* sum_hi, const double* sq_lo,
                             const double* sq_hi, std::size_t d, double n) {
  double c = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    const double s = sum_hi[k] - sum_lo[k];
    c += (sq_hi[k] - sq_lo[k]) - s * s / n;
  }
  return c;
}

void exp_inplace_scalar(double* x, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) x[k] = std::exp(x[k]);
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{
      Isa::Scalar,         dot_scalar,         squared_distance_scalar, axpy_scalar,
      rbf_row_sum_scalar, l2_from_prefix_scalar, exp_inplace_scalar,
  };
  return table;
}

}  // namespace timepred::simd
