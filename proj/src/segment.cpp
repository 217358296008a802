#include "timepred/segment.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "timepred/error.hpp"

namespace timepred {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

std::string describe(std::size_t length, const SegmentationConfig& config) {
  return "T=" + std::to_string(length) + ", K=" + std::to_string(config.n_breakpoints) +
         ", min_segment_length=" + std::to_string(config.min_segment_length) +
         ", jump=" + std::to_string(config.jump);
}

}  // namespace

Segmentation::Segmentation(std::vector<std::size_t> breakpoints, std::size_t length)
    : breakpoints_(std::move(breakpoints)), length_(length) {
  std::size_t prev = 0;
  for (std::size_t b : breakpoints_) {
    if (b <= prev || b >= length_) {
      fail(ErrorKind::InvalidRange, "breakpoints must be strictly increasing inside (0, " +
                                        std::to_string(length_) + ")");
    }
    prev = b;
  }
}

SegmentationConfig SegmentationConfig::defaults(std::size_t length, std::size_t n_breakpoints,
                                                const CostKind& cost) {
  SegmentationConfig c;
  c.n_breakpoints = n_breakpoints;
  c.jump = length <= 2000 ? 1 : 5;
  c.min_segment_length = cost.type == CostKind::Type::AR ? std::max<std::size_t>(5, cost.ar_order + 2) : 2;
  return c;
}

void check_feasible(std::size_t length, const SegmentationConfig& config, std::size_t cost_min_size) {
  if (config.jump < 1) fail(ErrorKind::Config, "jump must be >= 1");
  if (config.min_segment_length < std::max<std::size_t>(1, cost_min_size)) {
    fail(ErrorKind::Config, "min_segment_length " + std::to_string(config.min_segment_length) +
                                " is below the cost's minimum of " + std::to_string(cost_min_size));
  }
  if ((config.n_breakpoints + 1) * config.min_segment_length > length) {
    fail(ErrorKind::Infeasible, "no segmentation fits: " + describe(length, config));
  }
}

DynpResult segment_dynp(const SegmentCost& cost, const SegmentationConfig& config) {
  const std::size_t length = cost.length();
  const std::size_t k_bkps = config.n_breakpoints;
  const std::size_t min_len = config.min_segment_length;
  check_feasible(length, config, cost.min_size());

  if (k_bkps == 0) return {Segmentation({}, length), cost(0, length)};

  std::vector<std::size_t> cand;
  for (std::size_t b = config.jump; b + min_len <= length; b += config.jump) {
    if (b >= min_len) cand.push_back(b);
  }
  const std::size_t m = cand.size();

  // tail[k][i]: best cost of [cand[i], T) using k further breakpoints after cand[i].
  // next[k][i]: index of the first of those breakpoints (smallest on ties).
  std::vector<std::vector<double>> tail(k_bkps, std::vector<double>(m, kInf));
  std::vector<std::vector<std::size_t>> next(k_bkps, std::vector<std::size_t>(m, kNone));

  for (std::size_t k = 0; k < k_bkps; ++k) {
    // cand[i] is breakpoint number (K - k); it needs (K - k) segments before it
    // and k + 1 segments after it.
    const std::size_t lo = (k_bkps - k) * min_len;
    const std::size_t hi_room = (k + 1) * min_len;
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t s = cand[i];
      if (s < lo || s + hi_room > length) continue;
      if (k == 0) {
        tail[0][i] = cost(s, length);
        continue;
      }
      double best = kInf;
      std::size_t arg = kNone;
      for (std::size_t j = i + 1; j < m; ++j) {
        const std::size_t e = cand[j];
        if (e - s < min_len) continue;
        if (tail[k - 1][j] == kInf) continue;
        const double v = cost(s, e) + tail[k - 1][j];
        if (v < best) {
          best = v;
          arg = j;
        }
      }
      tail[k][i] = best;
      next[k][i] = arg;
    }
  }

  double best = kInf;
  std::size_t first = kNone;
  for (std::size_t i = 0; i < m; ++i) {
    if (tail[k_bkps - 1][i] == kInf) continue;
    const double v = cost(0, cand[i]) + tail[k_bkps - 1][i];
    if (v < best) {
      best = v;
      first = i;
    }
  }
  if (first == kNone) {
    fail(ErrorKind::Infeasible, "no admissible breakpoint set under " + describe(length, config));
  }

  std::vector<std::size_t> bkps;
  bkps.reserve(k_bkps);
  std::size_t i = first;
  for (std::size_t k = k_bkps; k-- > 0;) {
    bkps.push_back(cand[i]);
    if (k > 0) i = next[k][i];
  }
  return {Segmentation(std::move(bkps), length), best};
}

Segmentation segment_dynp(const TimeSeriesMatrix& series, const CostKind& cost,
                          const SegmentationConfig& config) {
  const auto bound = make_segment_cost(series, cost);
  return segment_dynp(*bound, config).segmentation;
}

}  // namespace timepred
