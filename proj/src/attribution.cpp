#include "timepred/attribution.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "timepred/error.hpp"

namespace timepred {
namespace {

double sign_or_one(double v) { return v < 0.0 ? -1.0 : 1.0; }

void check_sample(const TimePredictor& model, std::span<const double> sample) {
  if (sample.size() != model.input_width()) {
    fail(ErrorKind::Shape, "sample has " + std::to_string(sample.size()) + " features, model expects " +
                               std::to_string(model.input_width()));
  }
  for (double v : sample) {
    if (!std::isfinite(v)) fail(ErrorKind::Format, "sample contains a non-finite value");
  }
}

}  // namespace

double AttributionMap::relevance_sum() const {
  return std::accumulate(relevance.begin(), relevance.end(), 0.0);
}

AttributionMap lrp_explain(const TimePredictor& model, std::span<const double> sample, double reference,
                           double epsilon) {
  check_sample(model, sample);
  if (!(epsilon >= 0.0)) fail(ErrorKind::Config, "epsilon must be >= 0");

  const ForwardTrace tr = model.trace(sample);
  const auto& layers = model.layers();
  AttributionMap map;
  map.reference = reference;
  map.output = tr.output();
  map.explained_value = map.output - reference;

  std::vector<double> upper{map.explained_value};
  std::vector<double> lower;
  std::vector<double> z;
  for (std::size_t l = layers.size(); l-- > 0;) {
    const DenseLayer& layer = layers[l];
    const std::vector<double>& a = tr.inputs[l];
    const bool is_output = l + 1 == layers.size();
    const double bias_shift = is_output ? reference : 0.0;

    z = tr.pre[l];
    for (double& v : z) v -= bias_shift;
    double scale = 0.0;
    for (double v : z) scale = std::max(scale, std::abs(v));
    const double eps = epsilon * (scale > 0.0 ? scale : 1.0);

    lower.assign(layer.in, 0.0);
    for (std::size_t o = 0; o < layer.out; ++o) {
      if (upper[o] == 0.0) continue;
      const double denom = z[o] + eps * sign_or_one(z[o]);
      if (denom == 0.0) continue;
      const double factor = upper[o] / denom;
      const double* w = layer.weights.data() + o * layer.in;
      for (std::size_t i = 0; i < layer.in; ++i) lower[i] += a[i] * w[i] * factor;
      map.bias_relevance += (layer.biases[o] - bias_shift) * factor;
    }
    upper.swap(lower);
  }
  map.relevance = std::move(upper);
  return map;
}

AttributionMap gradient_input_explain(const TimePredictor& model, std::span<const double> sample,
                                      double reference) {
  check_sample(model, sample);
  const std::vector<double> grad = input_gradient(model, sample);
  const Standardizer& st = model.standardizer();
  AttributionMap map;
  map.reference = reference;
  map.output = model.forward(sample);
  map.explained_value = map.output - reference;
  map.relevance.resize(grad.size());
  for (std::size_t j = 0; j < grad.size(); ++j) {
    const double standardized = (sample[j] - st.mean[j]) / st.scale[j];
    map.relevance[j] = grad[j] * st.scale[j] * standardized;
  }
  map.bias_relevance = map.explained_value - map.relevance_sum();
  return map;
}

std::vector<AttributionMap> explain_rows(const TimePredictor& model, const TimeSeriesMatrix& series,
                                         std::span<const std::size_t> rows, double reference,
                                         double epsilon) {
  if (series.cols() != model.input_width()) {
    fail(ErrorKind::Shape, "series has " + std::to_string(series.cols()) + " columns, model expects " +
                               std::to_string(model.input_width()));
  }
  std::vector<AttributionMap> maps;
  maps.reserve(rows.size());
  for (std::size_t t : rows) {
    if (t >= series.rows()) {
      fail(ErrorKind::InvalidRange, "sample index " + std::to_string(t) + " is outside [0, " +
                                        std::to_string(series.rows()) + ")");
    }
    maps.push_back(lrp_explain(model, series.row(t), reference, epsilon));
  }
  return maps;
}

std::vector<double> mean_abs_relevance(std::span<const AttributionMap> maps) {
  if (maps.empty()) return {};
  std::vector<double> out(maps.front().relevance.size(), 0.0);
  for (const auto& m : maps) {
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += std::abs(m.relevance[j]);
  }
  for (double& v : out) v /= static_cast<double>(maps.size());
  return out;
}

}  // namespace timepred
