#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "timepred/matrix.hpp"

namespace timepred {

/// Which segment cost to minimise. RBF without an explicit bandwidth resolves
/// it with the median heuristic on the series being segmented.
struct CostKind {
  enum class Type { L2, AR, RBF };

  Type type = Type::L2;
  std::size_t ar_order = 1;
  std::optional<double> bandwidth;

  static CostKind l2() { return {Type::L2, 1, std::nullopt}; }
  static CostKind ar(std::size_t order = 1) { return {Type::AR, order, std::nullopt}; }
  static CostKind rbf(std::optional<double> sigma = std::nullopt) { return {Type::RBF, 1, sigma}; }

  /// "l2", "ar" or "rbf".
  std::string name() const;
  /// Accepts "l2", "ar", "rbf", "ar:<order>" and "rbf:<bandwidth>".
  static CostKind parse(const std::string& name);

  void validate() const;
};

inline constexpr std::size_t kDefaultBandwidthSampleCap = 1000;

/// Sum of squared deviations from the per-dimension mean over rows [start, end).
double cost_l2(const TimeSeriesMatrix& series, std::size_t start, std::size_t end);

/// Residual sum of squares of a per-dimension AR(order) fit with intercept
/// over [start, end), summed over dimensions. Lags never reach before start.
double cost_ar(const TimeSeriesMatrix& series, std::size_t start, std::size_t end,
               std::size_t order);

/// n - (1/n) * sum_{s,t} k(x_s, x_t) with k(u,v) = exp(-|u-v|^2 / (2 sigma^2)).
double cost_rbf(const TimeSeriesMatrix& series, std::size_t start, std::size_t end,
                double bandwidth);

/// sigma such that 2 sigma^2 is the median pairwise squared distance among at
/// most sample_cap rows drawn without replacement. Falls back to 1.0 when the
/// median is zero.
double median_heuristic_bandwidth(const TimeSeriesMatrix& series,
                                  std::size_t sample_cap = kDefaultBandwidthSampleCap,
                                  std::uint64_t seed = 0);

/// A cost bound to one series, answering c(start, end) queries. Holds a
/// reference to the series, which must outlive it.
class SegmentCost {
 public:
  virtual ~SegmentCost() = default;

  virtual double operator()(std::size_t start, std::size_t end) const = 0;
  /// Shortest segment the cost is defined on.
  virtual std::size_t min_size() const = 0;
  std::size_t length() const noexcept { return series_->rows(); }

 protected:
  explicit SegmentCost(const TimeSeriesMatrix& series) : series_(&series) {}
  void check_range(std::size_t start, std::size_t end) const;

  const TimeSeriesMatrix* series_;
};

/// L2 cost over precomputed prefix sums; O(d) per query.
class L2Cost final : public SegmentCost {
 public:
  explicit L2Cost(const TimeSeriesMatrix& series);
  double operator()(std::size_t start, std::size_t end) const override;
  std::size_t min_size() const override { return 1; }

 private:
  std::vector<double> sum_;     // (T+1) x d
  std::vector<double> sum_sq_;  // (T+1) x d
};

class ArCost final : public SegmentCost {
 public:
  ArCost(const TimeSeriesMatrix& series, std::size_t order);
  double operator()(std::size_t start, std::size_t end) const override;
  std::size_t min_size() const override { return order_ + 1; }
  std::size_t order() const noexcept { return order_; }

 private:
  std::size_t order_;
};

/// Gram sums are evaluated directly per query, O(n^2 d), with no cached Gram
/// matrix; memory stays O(T d).
class RbfCost final : public SegmentCost {
 public:
  RbfCost(const TimeSeriesMatrix& series, double bandwidth);
  double operator()(std::size_t start, std::size_t end) const override;
  std::size_t min_size() const override { return 1; }
  double bandwidth() const noexcept { return bandwidth_; }

 private:
  double bandwidth_;
  double gamma_;
};

std::unique_ptr<SegmentCost> make_segment_cost(const TimeSeriesMatrix& series, const CostKind& kind);

}  // namespace timepred
