#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "timepred/cost.hpp"
#include "timepred/matrix.hpp"
#include "timepred/segment.hpp"

namespace timepred {

/// Plain row-major matrix for intermediate results that are not time series.
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
};

struct ProjectionVector {
  std::vector<double> direction;  // unit length, largest-magnitude entry positive
  double singular_value = 0.0;
  std::size_t iterations = 0;
};

/// Segmentation of the raw multivariate series.
Segmentation vanilla_detect(const TimeSeriesMatrix& series, const CostKind& cost,
                            const SegmentationConfig& config);

/// d x (T-1) matrix; column t-1 holds sqrt(t(T-t)/T) * (mean of the first t
/// rows - mean of the remaining T-t rows) for t = 1..T-1.
DenseMatrix cusum_transform(const TimeSeriesMatrix& series);

/// Successive unit directions closer than this (in norm) end the power iteration.
inline constexpr double kPowerIterationStep = 1e-10;

/// Leading left singular pair of a d x n matrix by power iteration on C C^T,
/// stopping once successive directions differ by at most kPowerIterationStep
/// in norm or after max_iterations.
ProjectionVector leading_singular_vector(const DenseMatrix& matrix, std::uint64_t seed = 0,
                                         std::size_t max_iterations = 1000);

/// <x_t, direction> for every row.
std::vector<double> project_rows(const TimeSeriesMatrix& series, const ProjectionVector& projection);

struct ProjectionResult {
  Segmentation segmentation;
  ProjectionVector projection;
  std::vector<double> projected;  // <x_t, v> for every row
};

/// CUSUM-projection reduction: project rows onto the leading left singular
/// vector of the CUSUM matrix and segment the resulting scalar sequence.
ProjectionResult project_and_detect(const TimeSeriesMatrix& series, const CostKind& cost,
                                    const SegmentationConfig& config, std::uint64_t seed = 0);

}  // namespace timepred
