// Independent reference implementations used by the unit and acceptance
// tests. Everything here is deliberately naive.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "timepred/matrix.hpp"

namespace oracle {

inline timepred::TimeSeriesMatrix random_series(std::size_t rows, std::size_t cols, unsigned seed,
                                                double scale = 1.0) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, scale);
  std::vector<double> v(rows * cols);
  for (double& x : v) x = normal(gen);
  return timepred::TimeSeriesMatrix(rows, cols, std::move(v));
}

inline double l2(const timepred::TimeSeriesMatrix& x, std::size_t a, std::size_t b) {
  double total = 0.0;
  for (std::size_t j = 0; j < x.cols(); ++j) {
    double mean = 0.0;
    for (std::size_t t = a; t < b; ++t) mean += x(t, j);
    mean /= static_cast<double>(b - a);
    for (std::size_t t = a; t < b; ++t) total += (x(t, j) - mean) * (x(t, j) - mean);
  }
  return total;
}

// Per-dimension OLS with intercept solved by Householder QR.
inline double ar(const timepred::TimeSeriesMatrix& x, std::size_t a, std::size_t b, std::size_t p) {
  double total = 0.0;
  const std::size_t n = b - a - p;
  for (std::size_t j = 0; j < x.cols(); ++j) {
    Eigen::MatrixXd design(n, p + 1);
    Eigen::VectorXd y(n);
    for (std::size_t r = 0; r < n; ++r) {
      const std::size_t t = a + p + r;
      design(r, 0) = 1.0;
      for (std::size_t i = 1; i <= p; ++i) design(r, i) = x(t - i, j);
      y(r) = x(t, j);
    }
    const Eigen::VectorXd beta = design.colPivHouseholderQr().solve(y);
    total += (y - design * beta).squaredNorm();
  }
  return total;
}

inline double rbf(const timepred::TimeSeriesMatrix& x, std::size_t a, std::size_t b, double sigma) {
  double gram = 0.0;
  for (std::size_t s = a; s < b; ++s) {
    for (std::size_t t = a; t < b; ++t) {
      double d2 = 0.0;
      for (std::size_t j = 0; j < x.cols(); ++j) d2 += (x(s, j) - x(t, j)) * (x(s, j) - x(t, j));
      gram += std::exp(-d2 / (2.0 * sigma * sigma));
    }
  }
  const double n = static_cast<double>(b - a);
  return n - gram / n;
}

struct Optimum {
  std::vector<std::size_t> breakpoints;
  double cost = std::numeric_limits<double>::infinity();
};

// Enumerates every admissible breakpoint vector in lexicographic order and
// keeps the first strict minimum. Sums are right-associated:
// c(0,b1) + (c(b1,b2) + (... + c(bK,T))).
inline Optimum exhaustive(const std::function<double(std::size_t, std::size_t)>& cost, std::size_t length,
                          std::size_t k, std::size_t min_len, std::size_t jump = 1) {
  Optimum best;
  std::vector<std::size_t> cur;
  std::function<void(std::size_t)> rec = [&](std::size_t start) {
    if (cur.size() == k) {
      if (length - start < min_len) return;
      double v = cost(start, length);
      for (std::size_t i = cur.size(); i-- > 0;) {
        const std::size_t lo = i == 0 ? 0 : cur[i - 1];
        v = cost(lo, cur[i]) + v;
      }
      if (v < best.cost) {
        best.cost = v;
        best.breakpoints = cur;
      }
      return;
    }
    for (std::size_t b = start + min_len; b + min_len <= length; ++b) {
      if (b % jump != 0) continue;
      cur.push_back(b);
      rec(b);
      cur.pop_back();
    }
  };
  if (k == 0) {
    best.cost = cost(0, length);
    return best;
  }
  rec(0);
  return best;
}

}  // namespace oracle
