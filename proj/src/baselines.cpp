#include "timepred/baselines.hpp"

#include <cmath>

#include "timepred/error.hpp"
#include "timepred/rng.hpp"
#include "timepred/simd/kernels.hpp"

namespace timepred {
namespace {

void normalize(std::vector<double>& v) {
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm > 0.0) {
    for (double& x : v) x /= norm;
  }
}

}  // namespace

Segmentation vanilla_detect(const TimeSeriesMatrix& series, const CostKind& cost,
                            const SegmentationConfig& config) {
  return segment_dynp(series, cost, config);
}

DenseMatrix cusum_transform(const TimeSeriesMatrix& series) {
  const std::size_t n = series.rows();
  const std::size_t d = series.cols();
  if (n < 2) fail(ErrorKind::InvalidRange, "CUSUM transform needs T >= 2");

  DenseMatrix c{d, n - 1, std::vector<double>(d * (n - 1))};
  std::vector<double> prefix(n + 1);
  const double total_n = static_cast<double>(n);
  for (std::size_t j = 0; j < d; ++j) {
    prefix[0] = 0.0;
    for (std::size_t t = 0; t < n; ++t) prefix[t + 1] = prefix[t] + series(t, j);
    for (std::size_t t = 1; t < n; ++t) {
      const double left = static_cast<double>(t);
      const double right = total_n - left;
      const double gap = prefix[t] / left - (prefix[n] - prefix[t]) / right;
      c(j, t - 1) = std::sqrt(left * right / total_n) * gap;
    }
  }
  return c;
}

ProjectionVector leading_singular_vector(const DenseMatrix& matrix, std::uint64_t seed,
                                         std::size_t max_iterations) {
  const std::size_t d = matrix.rows;
  const std::size_t m = matrix.cols;
  const auto& kern = simd::kernels();

  // Gram of the rows: G = C C^T, d x d.
  std::vector<double> gram(d * d);
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = 0; b <= a; ++b) {
      const double v = kern.dot(matrix.values.data() + a * m, matrix.values.data() + b * m, m);
      gram[a * d + b] = v;
      gram[b * d + a] = v;
    }
  }

  Rng rng(derive_seed(seed, {0x706f77u}));
  std::vector<double> v(d);
  for (double& x : v) x = rng.normal();
  normalize(v);

  ProjectionVector out;
  std::vector<double> next(d);
  for (std::size_t it = 1; it <= max_iterations; ++it) {
    for (std::size_t a = 0; a < d; ++a) next[a] = kern.dot(gram.data() + a * d, v.data(), d);
    normalize(next);
    double step = 0.0;
    for (std::size_t a = 0; a < d; ++a) step += (next[a] - v[a]) * (next[a] - v[a]);
    v.swap(next);
    out.iterations = it;
    if (std::sqrt(step) <= kPowerIterationStep) break;
  }

  double rayleigh = 0.0;
  for (std::size_t a = 0; a < d; ++a) rayleigh += v[a] * kern.dot(gram.data() + a * d, v.data(), d);

  std::size_t largest = 0;
  for (std::size_t a = 1; a < d; ++a) {
    if (std::abs(v[a]) > std::abs(v[largest])) largest = a;
  }
  if (v[largest] < 0.0) {
    for (double& x : v) x = -x;
  }
  out.direction = std::move(v);
  out.singular_value = std::sqrt(std::max(0.0, rayleigh));
  return out;
}

std::vector<double> project_rows(const TimeSeriesMatrix& series, const ProjectionVector& projection) {
  if (projection.direction.size() != series.cols()) fail(ErrorKind::Shape, "projection width does not match the series");
  const auto& kern = simd::kernels();
  std::vector<double> u(series.rows());
  for (std::size_t t = 0; t < series.rows(); ++t) {
    u[t] = kern.dot(series.row(t).data(), projection.direction.data(), series.cols());
  }
  return u;
}

ProjectionResult project_and_detect(const TimeSeriesMatrix& series, const CostKind& cost,
                                    const SegmentationConfig& config, std::uint64_t seed) {
  ProjectionResult result;
  result.projection = leading_singular_vector(cusum_transform(series), seed);
  result.projected = project_rows(series, result.projection);
  result.segmentation = segment_dynp(TimeSeriesMatrix::column(result.projected), cost, config);
  return result;
}

}  // namespace timepred
