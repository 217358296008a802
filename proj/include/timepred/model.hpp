#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "timepred/matrix.hpp"

namespace timepred {

/// Mini-batch SGD with momentum on squared error plus
/// l1_weight * sum|w| + l2_weight * sum w^2 over weights (biases unpenalised).
struct TrainConfig {
  double l1_weight = 1e-4;
  double l2_weight = 1e-2;
  double learning_rate = 1e-2;
  double momentum = 0.9;
  std::size_t epochs = 60;
  std::size_t batch_size = 256;
  std::uint64_t seed = 0;

  void validate(std::size_t n_samples) const;
};

inline const std::vector<std::size_t> kDefaultHidden{64, 32};

/// Per-dimension z-scoring fitted on the training series. Scales are floored
/// at 1e-12.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const TimeSeriesMatrix& series);
  static Standardizer identity(std::size_t width);

  std::size_t width() const noexcept { return mean.size(); }
  void apply(std::span<const double> raw, std::span<double> out) const;
};

/// out x in weights (row-major) and out biases.
struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;
  std::vector<double> biases;

  double& w(std::size_t o, std::size_t i) { return weights[o * in + i]; }
  double w(std::size_t o, std::size_t i) const { return weights[o * in + i]; }
};

/// Activations recorded by one forward pass. inputs[l] feeds layer l,
/// pre[l] is its pre-activation; rectifiers sit between layers, the last
/// layer is linear.
struct ForwardTrace {
  std::vector<std::vector<double>> inputs;
  std::vector<std::vector<double>> pre;
  double output() const { return pre.back()[0]; }
};

/// f: R^d -> R. Rectifier hidden layers and a linear scalar output, applied
/// after the standardizer.
class TimePredictor {
 public:
  TimePredictor() = default;
  /// Zero-initialised network of the given sizes [d, h_1, ..., 1].
  TimePredictor(std::vector<std::size_t> layer_sizes, Standardizer standardizer);

  const std::vector<std::size_t>& layer_sizes() const noexcept { return sizes_; }
  std::size_t input_width() const noexcept { return sizes_.empty() ? 0 : sizes_.front(); }
  std::size_t hidden_layers() const noexcept { return layers_.empty() ? 0 : layers_.size() - 1; }

  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  std::vector<DenseLayer>& mutable_layers() noexcept { return layers_; }
  const Standardizer& standardizer() const noexcept { return standardizer_; }
  std::size_t parameter_count() const;

  double forward(std::span<const double> raw_row) const;
  /// Forward pass on an already standardized row.
  double forward_standardized(std::span<const double> row) const;
  ForwardTrace trace(std::span<const double> raw_row) const;

  /// Filled by fit(): mean objective per epoch, and the fitted values of the
  /// training series under the final parameters. Empty after load.
  const std::vector<double>& loss_history() const noexcept { return loss_history_; }
  const std::vector<double>& fitted_values() const noexcept { return fitted_; }

  std::vector<std::uint8_t> serialize() const;
  static TimePredictor deserialize(std::span<const std::uint8_t> bytes);
  void save(const std::string& path) const;
  static TimePredictor load(const std::string& path);

  bool same_parameters(const TimePredictor& other) const;

 private:
  friend TimePredictor fit(const TimeSeriesMatrix&, const TrainConfig&,
                           std::span<const std::size_t>);

  std::vector<std::size_t> sizes_;
  std::vector<DenseLayer> layers_;
  Standardizer standardizer_;
  std::vector<double> loss_history_;
  std::vector<double> fitted_;
};

struct PredictedIndexSeries {
  std::vector<double> values;
  std::size_t source_length = 0;

  TimeSeriesMatrix as_series() const { return TimeSeriesMatrix::column(values); }
};

/// (t+1)/T for t = 0..T-1.
std::vector<double> normalized_targets(std::size_t length);

/// Trains a predictor with the given hidden widths (empty = linear head).
TimePredictor fit(const TimeSeriesMatrix& series, const TrainConfig& config,
                  std::span<const std::size_t> hidden = kDefaultHidden);

/// Direct linear map d -> 1 with both penalties active: an elastic-net head
/// for frozen-backbone features.
TimePredictor linear_head_fit(const TimeSeriesMatrix& series, const TrainConfig& config);

PredictedIndexSeries predict(const TimePredictor& model, const TimeSeriesMatrix& series);

/// Gradient buffers shaped like the network's layers.
struct ParameterGradient {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;
};

/// Full-batch training objective: mean squared error against normalized time
/// targets plus the weight penalties. The L1 term uses sign(w), zero at w = 0.
class TrainingObjective {
 public:
  TrainingObjective(const TimeSeriesMatrix& series, double l1_weight, double l2_weight);

  double value(const TimePredictor& model) const;
  double value_and_gradient(const TimePredictor& model, ParameterGradient& grad) const;

 private:
  const TimeSeriesMatrix* series_;
  std::vector<double> targets_;
  double l1_;
  double l2_;
};

/// dy/dx_raw for one sample.
std::vector<double> input_gradient(const TimePredictor& model, std::span<const double> raw_row);

}  // namespace timepred
