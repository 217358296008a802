#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace timepred {

/// Dense row-major T x d observation matrix. Row t is the sample at time t.
/// Every entry is finite; constructors reject NaN/Inf and empty shapes.
class TimeSeriesMatrix {
 public:
  TimeSeriesMatrix() = default;
  TimeSeriesMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  /// Single-column series.
  static TimeSeriesMatrix column(std::vector<double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return rows_ == 0; }

  double operator()(std::size_t t, std::size_t j) const noexcept { return values_[t * cols_ + j]; }

  std::span<const double> row(std::size_t t) const noexcept {
    return {values_.data() + t * cols_, cols_};
  }
  std::span<const double> values() const noexcept { return values_; }
  const double* data() const noexcept { return values_.data(); }

  /// Copy of column j as a contiguous vector.
  std::vector<double> column_copy(std::size_t j) const;

  bool operator==(const TimeSeriesMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

}  // namespace timepred
