#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "timepred/matrix.hpp"
#include "timepred/model.hpp"

namespace timepred {

inline constexpr double kDefaultReference = 0.5;
inline constexpr double kDefaultLrpEpsilon = 1e-6;

/// Per-feature decomposition of output - reference for one sample.
/// relevance + bias_relevance sums to explained_value (exactly for epsilon 0).
struct AttributionMap {
  std::vector<double> relevance;
  double explained_value = 0.0;
  double reference = kDefaultReference;
  double output = 0.0;
  /// Share absorbed by biases (and, for the output layer, by bias - reference).
  double bias_relevance = 0.0;

  double relevance_sum() const;
};

/// Epsilon-rule LRP. epsilon is scaled by the largest |pre-activation| of each
/// layer; the output layer decomposes output - reference, treating
/// (bias - reference) as its bias term.
AttributionMap lrp_explain(const TimePredictor& model, std::span<const double> sample,
                           double reference = kDefaultReference, double epsilon = kDefaultLrpEpsilon);

/// relevance_i = dy/dx~_i * x~_i in standardized-input coordinates.
AttributionMap gradient_input_explain(const TimePredictor& model, std::span<const double> sample,
                                      double reference = kDefaultReference);

/// lrp_explain over selected rows of a series.
std::vector<AttributionMap> explain_rows(const TimePredictor& model, const TimeSeriesMatrix& series,
                                         std::span<const std::size_t> rows,
                                         double reference = kDefaultReference,
                                         double epsilon = kDefaultLrpEpsilon);

/// Mean |relevance| per feature across maps.
std::vector<double> mean_abs_relevance(std::span<const AttributionMap> maps);

}  // namespace timepred
