#include "timepred/cost.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>

#include "timepred/error.hpp"
#include "timepred/rng.hpp"
#include "timepred/simd/kernels.hpp"

namespace timepred {
namespace {

constexpr double kArJitter = 1e-8;

std::string range_text(std::size_t start, std::size_t end) {
  return "[" + std::to_string(start) + ", " + std::to_string(end) + ")";
}

void require_range(const TimeSeriesMatrix& series, std::size_t start, std::size_t end) {
  if (start >= end || end > series.rows()) {
    fail(ErrorKind::InvalidRange,
         "segment " + range_text(start, end) + " is empty or exceeds T=" + std::to_string(series.rows()));
  }
}

// In-place Cholesky solve of the q x q system G beta = h. Returns false when a
// pivot is not safely positive.
bool cholesky_solve(std::vector<double>& g, std::vector<double>& h, std::size_t q) {
  double scale = 1.0;
  for (std::size_t i = 0; i < q; ++i) scale = std::max(scale, std::abs(g[i * q + i]));
  const double tiny = 1e-12 * scale;
  for (std::size_t j = 0; j < q; ++j) {
    double pivot = g[j * q + j];
    for (std::size_t k = 0; k < j; ++k) pivot -= g[j * q + k] * g[j * q + k];
    if (!(pivot > tiny)) return false;
    const double ljj = std::sqrt(pivot);
    g[j * q + j] = ljj;
    for (std::size_t i = j + 1; i < q; ++i) {
      double v = g[i * q + j];
      for (std::size_t k = 0; k < j; ++k) v -= g[i * q + k] * g[j * q + k];
      g[i * q + j] = v / ljj;
    }
  }
  for (std::size_t i = 0; i < q; ++i) {
    double v = h[i];
    for (std::size_t k = 0; k < i; ++k) v -= g[i * q + k] * h[k];
    h[i] = v / g[i * q + i];
  }
  for (std::size_t i = q; i-- > 0;) {
    double v = h[i];
    for (std::size_t k = i + 1; k < q; ++k) v -= g[k * q + i] * h[k];
    h[i] = v / g[i * q + i];
  }
  return true;
}

// RSS of the AR(order) fit of column j over [start, end).
double ar_rss_column(const TimeSeriesMatrix& series, std::size_t j, std::size_t start,
                     std::size_t end, std::size_t order) {
  const std::size_t q = order + 1;
  std::vector<double> gram(q * q, 0.0);
  std::vector<double> rhs(q, 0.0);
  std::vector<double> z(q);
  double yy = 0.0;
  for (std::size_t r = start + order; r < end; ++r) {
    z[0] = 1.0;
    for (std::size_t i = 1; i <= order; ++i) z[i] = series(r - i, j);
    const double y = series(r, j);
    for (std::size_t a = 0; a < q; ++a) {
      rhs[a] += z[a] * y;
      for (std::size_t b = 0; b <= a; ++b) gram[a * q + b] += z[a] * z[b];
    }
    yy += y * y;
  }
  for (std::size_t a = 0; a < q; ++a) {
    for (std::size_t b = a + 1; b < q; ++b) gram[a * q + b] = gram[b * q + a];
  }

  std::vector<double> factor = gram;
  std::vector<double> beta = rhs;
  if (!cholesky_solve(factor, beta, q)) {
    factor = gram;
    beta = rhs;
    for (std::size_t a = 0; a < q; ++a) factor[a * q + a] += kArJitter;
    if (!cholesky_solve(factor, beta, q)) {
      // Jitter cannot rescue a zero system (no regression rows); nothing to explain.
      return 0.0;
    }
  }

  // |y - Z beta|^2 expanded with the unjittered Gram.
  double fit_term = 0.0;
  double quad_term = 0.0;
  for (std::size_t a = 0; a < q; ++a) {
    fit_term += beta[a] * rhs[a];
    double row = 0.0;
    for (std::size_t b = 0; b < q; ++b) row += gram[a * q + b] * beta[b];
    quad_term += beta[a] * row;
  }
  return std::max(0.0, yy - 2.0 * fit_term + quad_term);
}

}  // namespace

std::string CostKind::name() const {
  switch (type) {
    case Type::L2: return "l2";
    case Type::AR: return "ar";
    case Type::RBF: return "rbf";
  }
  return "unknown";
}

CostKind CostKind::parse(const std::string& name) {
  if (name == "l2") return l2();
  if (name == "ar") return ar();
  if (name == "rbf") return rbf();
  // "ar:<order>" and "rbf:<bandwidth>"
  const auto colon = name.find(':');
  if (colon != std::string::npos) {
    const std::string head = name.substr(0, colon), arg = name.substr(colon + 1);
    char* end = nullptr;
    if (head == "ar") {
      const long long p = std::strtoll(arg.c_str(), &end, 10);
      if (!arg.empty() && *end == '\0' && p >= 1) return ar(static_cast<std::size_t>(p));
      fail(ErrorKind::Config, "AR order must be a positive integer, got '" + arg + "'");
    }
    if (head == "rbf") {
      const double sigma = std::strtod(arg.c_str(), &end);
      if (!arg.empty() && *end == '\0' && sigma > 0.0 && std::isfinite(sigma)) return rbf(sigma);
      fail(ErrorKind::Config, "RBF bandwidth must be a positive number, got '" + arg + "'");
    }
  }
  fail(ErrorKind::Config, "unknown cost '" + name + "' (expected l2, ar[:order] or rbf[:bandwidth])");
}

void CostKind::validate() const {
  if (type == Type::AR && ar_order < 1) fail(ErrorKind::Config, "AR order must be >= 1");
  if (type == Type::RBF && bandwidth && !(*bandwidth > 0.0 && std::isfinite(*bandwidth))) {
    fail(ErrorKind::Config, "RBF bandwidth must be a positive finite number");
  }
}

double cost_l2(const TimeSeriesMatrix& series, std::size_t start, std::size_t end) {
  require_range(series, start, end);
  const std::size_t d = series.cols();
  const double n = static_cast<double>(end - start);
  double total = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    double s = 0.0, sq = 0.0;
    for (std::size_t t = start; t < end; ++t) {
      const double v = series(t, j);
      s += v;
      sq += v * v;
    }
    total += sq - s * s / n;
  }
  return std::max(0.0, total);
}

double cost_ar(const TimeSeriesMatrix& series, std::size_t start, std::size_t end,
               std::size_t order) {
  if (order < 1) fail(ErrorKind::Config, "AR order must be >= 1");
  if (end > series.rows() || start >= end || end - start < order + 1) {
    fail(ErrorKind::InvalidRange, "AR(" + std::to_string(order) + ") needs at least " +
                                      std::to_string(order + 1) + " points, got segment " +
                                      range_text(start, end));
  }
  double total = 0.0;
  for (std::size_t j = 0; j < series.cols(); ++j) total += ar_rss_column(series, j, start, end, order);
  return total;
}

double cost_rbf(const TimeSeriesMatrix& series, std::size_t start, std::size_t end,
                double bandwidth) {
  return RbfCost(series, bandwidth)(start, end);
}

double median_heuristic_bandwidth(const TimeSeriesMatrix& series, std::size_t sample_cap,
                                  std::uint64_t seed) {
  const std::size_t t_len = series.rows();
  if (t_len < 2) fail(ErrorKind::InvalidRange, "median heuristic needs at least two rows");
  if (sample_cap < 2) fail(ErrorKind::Config, "median heuristic sample cap must be >= 2");

  std::vector<std::size_t> rows(t_len);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  if (t_len > sample_cap) {
    Rng rng(derive_seed(seed, {0x6d6564u}));
    for (std::size_t i = 0; i < sample_cap; ++i) {
      const std::size_t k = i + rng.uniform_int(0, t_len - 1 - i);
      std::swap(rows[i], rows[k]);
    }
    rows.resize(sample_cap);
    std::sort(rows.begin(), rows.end());
  }

  const auto& kern = simd::kernels();
  const std::size_t d = series.cols();
  std::vector<double> dist;
  dist.reserve(rows.size() * (rows.size() - 1) / 2);
  for (std::size_t a = 0; a < rows.size(); ++a) {
    for (std::size_t b = a + 1; b < rows.size(); ++b) {
      dist.push_back(kern.squared_distance(series.row(rows[a]).data(), series.row(rows[b]).data(), d));
    }
  }
  const std::size_t m = dist.size();
  const auto mid = dist.begin() + static_cast<std::ptrdiff_t>(m / 2);
  std::nth_element(dist.begin(), mid, dist.end());
  double median = *mid;
  if (m % 2 == 0) {
    median = 0.5 * (median + *std::max_element(dist.begin(), mid));
  }
  if (!(median > 0.0)) return 1.0;
  return std::sqrt(median / 2.0);
}

void SegmentCost::check_range(std::size_t start, std::size_t end) const {
  require_range(*series_, start, end);
}

L2Cost::L2Cost(const TimeSeriesMatrix& series) : SegmentCost(series) {
  const std::size_t t_len = series.rows();
  const std::size_t d = series.cols();
  sum_.assign((t_len + 1) * d, 0.0);
  sum_sq_.assign((t_len + 1) * d, 0.0);
  for (std::size_t t = 0; t < t_len; ++t) {
    for (std::size_t j = 0; j < d; ++j) {
      const double v = series(t, j);
      sum_[(t + 1) * d + j] = sum_[t * d + j] + v;
      sum_sq_[(t + 1) * d + j] = sum_sq_[t * d + j] + v * v;
    }
  }
}

double L2Cost::operator()(std::size_t start, std::size_t end) const {
  check_range(start, end);
  const std::size_t d = series_->cols();
  const double c = simd::kernels().l2_from_prefix(sum_.data() + start * d, sum_.data() + end * d,
                                                   sum_sq_.data() + start * d,
                                                   sum_sq_.data() + end * d, d,
                                                   static_cast<double>(end - start));
  return std::max(0.0, c);
}

ArCost::ArCost(const TimeSeriesMatrix& series, std::size_t order) : SegmentCost(series), order_(order) {
  if (order_ < 1) fail(ErrorKind::Config, "AR order must be >= 1");
}

double ArCost::operator()(std::size_t start, std::size_t end) const {
  return cost_ar(*series_, start, end, order_);
}

RbfCost::RbfCost(const TimeSeriesMatrix& series, double bandwidth)
    : SegmentCost(series), bandwidth_(bandwidth) {
  if (!(bandwidth > 0.0 && std::isfinite(bandwidth))) {
    fail(ErrorKind::Config, "RBF bandwidth must be a positive finite number");
  }
  gamma_ = 1.0 / (2.0 * bandwidth * bandwidth);
}

double RbfCost::operator()(std::size_t start, std::size_t end) const {
  check_range(start, end);
  const auto& kern = simd::kernels();
  const std::size_t d = series_->cols();
  const std::size_t len = end - start;

  // Column-major copy of the segment so the kernel vectorises across samples.
  std::vector<double> cols;
  const double* base = series_->data() + start;
  std::size_t stride = len;
  if (d == 1) {
    stride = series_->rows();
  } else {
    cols.resize(d * len);
    for (std::size_t t = 0; t < len; ++t) {
      for (std::size_t k = 0; k < d; ++k) cols[k * len + t] = (*series_)(start + t, k);
    }
    base = cols.data();
  }
  std::vector<double> xi(d);
  double off_diagonal = 0.0;
  for (std::size_t i = 0; i + 1 < len; ++i) {
    for (std::size_t k = 0; k < d; ++k) xi[k] = base[k * stride + i];
    off_diagonal += kern.rbf_row_sum(base, stride, d, xi.data(), i + 1, len, gamma_);
  }
  const double n = static_cast<double>(len);
  const double gram_sum = n + 2.0 * off_diagonal;
  return std::max(0.0, n - gram_sum / n);
}

std::unique_ptr<SegmentCost> make_segment_cost(const TimeSeriesMatrix& series, const CostKind& kind) {
  kind.validate();
  switch (kind.type) {
    case CostKind::Type::L2: return std::make_unique<L2Cost>(series);
    case CostKind::Type::AR: return std::make_unique<ArCost>(series, kind.ar_order);
    case CostKind::Type::RBF: {
      const double sigma = kind.bandwidth ? *kind.bandwidth
                                          : (series.rows() >= 2 ? median_heuristic_bandwidth(series) : 1.0);
      return std::make_unique<RbfCost>(series, sigma);
    }
  }
  fail(ErrorKind::Config, "unknown cost kind");
}

}  // namespace timepred
