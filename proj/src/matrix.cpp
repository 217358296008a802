#include "timepred/matrix.hpp"

#include <cmath>
#include <string>

#include "timepred/error.hpp"

namespace timepred {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidRange: return "invalid-range";
    case ErrorKind::Infeasible: return "infeasible";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::Config: return "config";
    case ErrorKind::Divergence: return "divergence";
    case ErrorKind::Format: return "format";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

TimeSeriesMatrix::TimeSeriesMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (rows_ == 0 || cols_ == 0) {
    fail(ErrorKind::Shape, "time series needs T >= 1 and d >= 1");
  }
  if (values_.size() != rows_ * cols_) {
    fail(ErrorKind::Shape, "time series holds " + std::to_string(values_.size()) +
                               " values, expected " + std::to_string(rows_ * cols_));
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      fail(ErrorKind::Format, "non-finite value at row " + std::to_string(i / cols_) +
                                  ", column " + std::to_string(i % cols_));
    }
  }
}

TimeSeriesMatrix TimeSeriesMatrix::column(std::vector<double> values) {
  const std::size_t n = values.size();
  return TimeSeriesMatrix(n, 1, std::move(values));
}

std::vector<double> TimeSeriesMatrix::column_copy(std::size_t j) const {
  std::vector<double> out(rows_);
  for (std::size_t t = 0; t < rows_; ++t) out[t] = values_[t * cols_ + j];
  return out;
}

}  // namespace timepred
