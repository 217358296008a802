#pragma once

#include <cstddef>
#include <vector>

#include "timepred/cost.hpp"
#include "timepred/matrix.hpp"

namespace timepred {

/// Strictly increasing breakpoints t_1 < ... < t_K inside (0, T). Segment k
/// spans [t_k, t_{k+1}) with t_0 = 0 and t_{K+1} = T.
class Segmentation {
 public:
  Segmentation() = default;
  Segmentation(std::vector<std::size_t> breakpoints, std::size_t length);

  const std::vector<std::size_t>& breakpoints() const noexcept { return breakpoints_; }
  std::size_t length() const noexcept { return length_; }
  std::size_t size() const noexcept { return breakpoints_.size(); }

  bool operator==(const Segmentation&) const = default;

 private:
  std::vector<std::size_t> breakpoints_;
  std::size_t length_ = 0;
};

struct SegmentationConfig {
  std::size_t n_breakpoints = 1;
  std::size_t min_segment_length = 2;
  std::size_t jump = 1;

  /// jump is 1 up to T = 2000 and 5 beyond; min length follows the cost
  /// (2 for L2/RBF, max(5, order + 2) for AR).
  static SegmentationConfig defaults(std::size_t length, std::size_t n_breakpoints,
                                     const CostKind& cost);
};

struct DynpResult {
  Segmentation segmentation;
  double total_cost = 0.0;
};

/// Exact minimiser of the summed segment cost over all segmentations with
/// exactly K breakpoints, each a multiple of jump, every segment at least
/// min_segment_length long. Ties resolve to the lexicographically smallest
/// breakpoint vector.
DynpResult segment_dynp(const SegmentCost& cost, const SegmentationConfig& config);

Segmentation segment_dynp(const TimeSeriesMatrix& series, const CostKind& cost,
                          const SegmentationConfig& config);

/// Throws Infeasible when no admissible segmentation exists, Config when the
/// config is malformed.
void check_feasible(std::size_t length, const SegmentationConfig& config, std::size_t cost_min_size);

}  // namespace timepred
