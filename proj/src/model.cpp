#include "timepred/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>

#include "timepred/error.hpp"
#include "timepred/rng.hpp"
#include "timepred/simd/kernels.hpp"

namespace timepred {
namespace {

constexpr char kModelMagic[4] = {'T', 'P', 'M', '1'};
constexpr double kMinScale = 1e-12;

static_assert(std::endian::native == std::endian::little,
              "model serialization assumes a little-endian host");

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

ParameterGradient zero_gradient(const TimePredictor& model) {
  ParameterGradient g;
  for (const auto& layer : model.layers()) {
    g.weights.emplace_back(layer.weights.size(), 0.0);
    g.biases.emplace_back(layer.biases.size(), 0.0);
  }
  return g;
}

void clear(ParameterGradient& g) {
  for (auto& w : g.weights) std::fill(w.begin(), w.end(), 0.0);
  for (auto& b : g.biases) std::fill(b.begin(), b.end(), 0.0);
}

// Scratch buffers for forward/backward on one row.
struct Workspace {
  std::vector<std::vector<double>> act;    // act[l]: input of layer l; act[L] = output
  std::vector<std::vector<double>> pre;    // pre[l]: pre-activation of layer l
  std::vector<std::vector<double>> delta;  // dLoss/dpre[l]

  explicit Workspace(const std::vector<std::size_t>& sizes) {
    const std::size_t n_layers = sizes.size() - 1;
    act.resize(n_layers + 1);
    pre.resize(n_layers);
    delta.resize(n_layers);
    for (std::size_t l = 0; l <= n_layers; ++l) act[l].resize(sizes[l]);
    for (std::size_t l = 0; l < n_layers; ++l) {
      pre[l].resize(sizes[l + 1]);
      delta[l].resize(sizes[l + 1]);
    }
  }
};

// act[0] must hold the standardized input.
double forward_into(const std::vector<DenseLayer>& layers, Workspace& ws) {
  const auto& kern = simd::kernels();
  const std::size_t n_layers = layers.size();
  for (std::size_t l = 0; l < n_layers; ++l) {
    const DenseLayer& layer = layers[l];
    const double* in = ws.act[l].data();
    for (std::size_t o = 0; o < layer.out; ++o) {
      ws.pre[l][o] = layer.biases[o] + kern.dot(layer.weights.data() + o * layer.in, in, layer.in);
    }
    const bool hidden = l + 1 < n_layers;
    for (std::size_t o = 0; o < layer.out; ++o) {
      ws.act[l + 1][o] = hidden ? std::max(0.0, ws.pre[l][o]) : ws.pre[l][o];
    }
  }
  return ws.pre.back()[0];
}

// Backpropagates dLoss/doutput = seed through the recorded pass. When grad is
// non-null, parameter gradients are accumulated into it. Returns nothing; the
// input gradient is left in input_grad when non-null.
void backward_from(const std::vector<DenseLayer>& layers, Workspace& ws, double seed,
                   ParameterGradient* grad, std::vector<double>* input_grad) {
  const auto& kern = simd::kernels();
  const std::size_t n_layers = layers.size();
  ws.delta[n_layers - 1][0] = seed;
  for (std::size_t l = n_layers; l-- > 0;) {
    const DenseLayer& layer = layers[l];
    const std::vector<double>& dl = ws.delta[l];
    if (grad != nullptr) {
      double* gw = grad->weights[l].data();
      for (std::size_t o = 0; o < layer.out; ++o) {
        if (dl[o] == 0.0) continue;
        kern.axpy(dl[o], ws.act[l].data(), gw + o * layer.in, layer.in);
        grad->biases[l][o] += dl[o];
      }
    }
    if (l == 0 && input_grad == nullptr) break;
    std::vector<double>& below = l == 0 ? *input_grad : ws.delta[l - 1];
    below.assign(layer.in, 0.0);
    for (std::size_t o = 0; o < layer.out; ++o) {
      if (dl[o] == 0.0) continue;
      kern.axpy(dl[o], layer.weights.data() + o * layer.in, below.data(), layer.in);
    }
    if (l > 0) {
      for (std::size_t i = 0; i < layer.in; ++i) {
        if (!(ws.pre[l - 1][i] > 0.0)) below[i] = 0.0;
      }
    }
  }
}

double penalty(const std::vector<DenseLayer>& layers, double l1, double l2) {
  double abs_sum = 0.0, sq_sum = 0.0;
  for (const auto& layer : layers) {
    for (double w : layer.weights) {
      abs_sum += std::abs(w);
      sq_sum += w * w;
    }
  }
  return l1 * abs_sum + l2 * sq_sum;
}

std::vector<double> standardize_all(const TimeSeriesMatrix& series, const Standardizer& st) {
  std::vector<double> out(series.rows() * series.cols());
  for (std::size_t t = 0; t < series.rows(); ++t) {
    st.apply(series.row(t), {out.data() + t * series.cols(), series.cols()});
  }
  return out;
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * b);
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * b);
    return std::bit_cast<double>(v);
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) fail(ErrorKind::Format, "model file is truncated");
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

void TrainConfig::validate(std::size_t n_samples) const {
  if (!(l1_weight >= 0.0) || !(l2_weight >= 0.0)) fail(ErrorKind::Config, "penalty weights must be >= 0");
  if (!(learning_rate > 0.0)) fail(ErrorKind::Config, "learning rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) fail(ErrorKind::Config, "momentum must lie in [0, 1)");
  if (epochs < 1) fail(ErrorKind::Config, "epochs must be >= 1");
  if (batch_size < 1 || batch_size > n_samples) {
    fail(ErrorKind::Config, "batch size must lie in [1, T=" + std::to_string(n_samples) + "]");
  }
}

Standardizer Standardizer::fit(const TimeSeriesMatrix& series) {
  const std::size_t n = series.rows(), d = series.cols();
  Standardizer st;
  st.mean.assign(d, 0.0);
  st.scale.assign(d, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t j = 0; j < d; ++j) st.mean[j] += series(t, j);
  }
  for (double& m : st.mean) m /= static_cast<double>(n);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t j = 0; j < d; ++j) {
      const double c = series(t, j) - st.mean[j];
      st.scale[j] += c * c;
    }
  }
  for (double& s : st.scale) s = std::max(kMinScale, std::sqrt(s / static_cast<double>(n)));
  return st;
}

Standardizer Standardizer::identity(std::size_t width) {
  return {std::vector<double>(width, 0.0), std::vector<double>(width, 1.0)};
}

void Standardizer::apply(std::span<const double> raw, std::span<double> out) const {
  for (std::size_t j = 0; j < mean.size(); ++j) out[j] = (raw[j] - mean[j]) / scale[j];
}

TimePredictor::TimePredictor(std::vector<std::size_t> layer_sizes, Standardizer standardizer)
    : sizes_(std::move(layer_sizes)), standardizer_(std::move(standardizer)) {
  if (sizes_.size() < 2 || sizes_.back() != 1) {
    fail(ErrorKind::Config, "layer sizes must run from the input width to a single output");
  }
  for (std::size_t s : sizes_) {
    if (s == 0) fail(ErrorKind::Config, "layer widths must be >= 1");
  }
  if (standardizer_.width() != sizes_.front() || standardizer_.scale.size() != sizes_.front()) {
    fail(ErrorKind::Shape, "standardizer width does not match the input layer");
  }
  for (double s : standardizer_.scale) {
    if (!(s >= kMinScale)) fail(ErrorKind::Config, "standardizer scale below the 1e-12 floor");
  }
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    DenseLayer layer;
    layer.in = sizes_[l];
    layer.out = sizes_[l + 1];
    layer.weights.assign(layer.in * layer.out, 0.0);
    layer.biases.assign(layer.out, 0.0);
    layers_.push_back(std::move(layer));
  }
}

std::size_t TimePredictor::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weights.size() + l.biases.size();
  return n;
}

double TimePredictor::forward(std::span<const double> raw_row) const {
  if (raw_row.size() != input_width()) {
    fail(ErrorKind::Shape, "sample has " + std::to_string(raw_row.size()) + " features, model expects " +
                               std::to_string(input_width()));
  }
  Workspace ws(sizes_);
  standardizer_.apply(raw_row, ws.act[0]);
  return forward_into(layers_, ws);
}

double TimePredictor::forward_standardized(std::span<const double> row) const {
  Workspace ws(sizes_);
  std::copy(row.begin(), row.end(), ws.act[0].begin());
  return forward_into(layers_, ws);
}

ForwardTrace TimePredictor::trace(std::span<const double> raw_row) const {
  if (raw_row.size() != input_width()) {
    fail(ErrorKind::Shape, "sample has " + std::to_string(raw_row.size()) + " features, model expects " +
                               std::to_string(input_width()));
  }
  Workspace ws(sizes_);
  standardizer_.apply(raw_row, ws.act[0]);
  forward_into(layers_, ws);
  ForwardTrace tr;
  tr.inputs.assign(ws.act.begin(), ws.act.end() - 1);
  tr.pre = ws.pre;
  return tr;
}

bool TimePredictor::same_parameters(const TimePredictor& other) const {
  if (sizes_ != other.sizes_) return false;
  if (standardizer_.mean != other.standardizer_.mean || standardizer_.scale != other.standardizer_.scale) {
    return false;
  }
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (layers_[l].weights != other.layers_[l].weights || layers_[l].biases != other.layers_[l].biases) {
      return false;
    }
  }
  return true;
}

std::vector<std::uint8_t> TimePredictor::serialize() const {
  std::vector<std::uint8_t> out(std::begin(kModelMagic), std::end(kModelMagic));
  put_u32(out, static_cast<std::uint32_t>(sizes_.size()));
  for (std::size_t s : sizes_) put_u32(out, static_cast<std::uint32_t>(s));
  for (double v : standardizer_.mean) put_f64(out, v);
  for (double v : standardizer_.scale) put_f64(out, v);
  for (const auto& layer : layers_) {
    for (double v : layer.weights) put_f64(out, v);
    for (double v : layer.biases) put_f64(out, v);
  }
  return out;
}

TimePredictor TimePredictor::deserialize(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kModelMagic, 4) != 0) {
    fail(ErrorKind::Format, "not a model file (missing TPM1 magic)");
  }
  Reader in(bytes.subspan(4));
  const std::uint32_t n_sizes = in.u32();
  if (n_sizes < 2 || n_sizes > 64) fail(ErrorKind::Format, "model file has an implausible layer count");
  std::vector<std::size_t> sizes(n_sizes);
  for (auto& s : sizes) {
    s = in.u32();
    if (s == 0) fail(ErrorKind::Format, "model file has a zero-width layer");
  }
  if (sizes.back() != 1) fail(ErrorKind::Format, "model output layer must have width 1");
  Standardizer st;
  st.mean.resize(sizes.front());
  st.scale.resize(sizes.front());
  for (double& v : st.mean) v = in.f64();
  for (double& v : st.scale) v = in.f64();
  TimePredictor model(std::move(sizes), std::move(st));
  for (auto& layer : model.layers_) {
    for (double& v : layer.weights) v = in.f64();
    for (double& v : layer.biases) v = in.f64();
  }
  if (!in.done()) fail(ErrorKind::Format, "model file has trailing bytes");
  return model;
}

void TimePredictor::save(const std::string& path) const {
  const auto bytes = serialize();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::Io, "failed writing '" + path + "'");
}

TimePredictor TimePredictor::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open model file '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

std::vector<double> normalized_targets(std::size_t length) {
  std::vector<double> y(length);
  const double n = static_cast<double>(length);
  for (std::size_t t = 0; t < length; ++t) y[t] = static_cast<double>(t + 1) / n;
  return y;
}

TimePredictor fit(const TimeSeriesMatrix& series, const TrainConfig& config,
                  std::span<const std::size_t> hidden) {
  const std::size_t n = series.rows();
  const std::size_t d = series.cols();
  config.validate(n);

  std::vector<std::size_t> sizes{d};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(1);
  TimePredictor model(sizes, Standardizer::fit(series));
  const std::vector<double> x = standardize_all(series, model.standardizer());
  const std::vector<double> y = normalized_targets(n);
  const double mean_target = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);

  Rng init(derive_seed(config.seed, {0x696e6974u}));
  for (auto& layer : model.layers_) {
    const double bound = std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
    for (double& w : layer.weights) w = init.uniform(-bound, bound);
  }
  model.layers_.back().biases[0] = mean_target;

  ParameterGradient grad = zero_gradient(model);
  ParameterGradient velocity = zero_gradient(model);
  Workspace ws(sizes);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  const double lr = config.learning_rate;
  const double shrink = lr * config.l1_weight;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    Rng shuffle(derive_seed(config.seed, {0x73687566u, epoch}));
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[shuffle.uniform_int(0, i - 1)]);

    double epoch_loss = 0.0;
    for (std::size_t begin = 0; begin < n; begin += config.batch_size) {
      const std::size_t end = std::min(n, begin + config.batch_size);
      const double inv_batch = 1.0 / static_cast<double>(end - begin);
      clear(grad);
      double sse = 0.0;
      for (std::size_t b = begin; b < end; ++b) {
        const std::size_t t = order[b];
        std::copy_n(x.data() + t * d, d, ws.act[0].begin());
        const double residual = forward_into(model.layers_, ws) - y[t];
        sse += residual * residual;
        backward_from(model.layers_, ws, 2.0 * residual * inv_batch, &grad, nullptr);
      }
      const double batch_obj = sse * inv_batch + penalty(model.layers_, config.l1_weight, config.l2_weight);
      if (!std::isfinite(batch_obj)) {
        fail(ErrorKind::Divergence, "training diverged (non-finite loss) in epoch " + std::to_string(epoch + 1));
      }
      epoch_loss += batch_obj * static_cast<double>(end - begin);

      // Momentum step on the smooth part, then soft-thresholding for L1.
      for (std::size_t l = 0; l < model.layers_.size(); ++l) {
        DenseLayer& layer = model.layers_[l];
        auto& vw = velocity.weights[l];
        const auto& gw = grad.weights[l];
        for (std::size_t k = 0; k < layer.weights.size(); ++k) {
          const double g = gw[k] + 2.0 * config.l2_weight * layer.weights[k];
          vw[k] = config.momentum * vw[k] - lr * g;
          double w = layer.weights[k] + vw[k];
          if (shrink > 0.0) w = sign(w) * std::max(0.0, std::abs(w) - shrink);
          layer.weights[k] = w;
        }
        auto& vb = velocity.biases[l];
        const auto& gb = grad.biases[l];
        for (std::size_t k = 0; k < layer.biases.size(); ++k) {
          vb[k] = config.momentum * vb[k] - lr * gb[k];
          layer.biases[k] += vb[k];
        }
      }
    }
    epoch_loss /= static_cast<double>(n);
    if (!std::isfinite(epoch_loss)) {
      fail(ErrorKind::Divergence, "training diverged (non-finite loss) in epoch " + std::to_string(epoch + 1));
    }
    model.loss_history_.push_back(epoch_loss);
  }

  model.fitted_.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    std::copy_n(x.data() + t * d, d, ws.act[0].begin());
    const double v = forward_into(model.layers_, ws);
    if (!std::isfinite(v)) {
      fail(ErrorKind::Divergence, "training diverged (non-finite output) after epoch " +
                                      std::to_string(config.epochs));
    }
    model.fitted_[t] = v;
  }
  return model;
}

TimePredictor linear_head_fit(const TimeSeriesMatrix& series, const TrainConfig& config) {
  return fit(series, config, std::span<const std::size_t>{});
}

PredictedIndexSeries predict(const TimePredictor& model, const TimeSeriesMatrix& series) {
  if (series.cols() != model.input_width()) {
    fail(ErrorKind::Shape, "series has " + std::to_string(series.cols()) + " columns, model expects " +
                               std::to_string(model.input_width()));
  }
  PredictedIndexSeries out;
  out.source_length = series.rows();
  out.values.resize(series.rows());
  Workspace ws(model.layer_sizes());
  for (std::size_t t = 0; t < series.rows(); ++t) {
    model.standardizer().apply(series.row(t), ws.act[0]);
    out.values[t] = forward_into(model.layers(), ws);
  }
  return out;
}

TrainingObjective::TrainingObjective(const TimeSeriesMatrix& series, double l1_weight, double l2_weight)
    : series_(&series), targets_(normalized_targets(series.rows())), l1_(l1_weight), l2_(l2_weight) {}

double TrainingObjective::value(const TimePredictor& model) const {
  const auto fitted = predict(model, *series_);
  double sse = 0.0;
  for (std::size_t t = 0; t < targets_.size(); ++t) {
    const double r = fitted.values[t] - targets_[t];
    sse += r * r;
  }
  return sse / static_cast<double>(targets_.size()) + penalty(model.layers(), l1_, l2_);
}

double TrainingObjective::value_and_gradient(const TimePredictor& model, ParameterGradient& grad) const {
  if (series_->cols() != model.input_width()) fail(ErrorKind::Shape, "series width does not match the model");
  grad = zero_gradient(model);
  Workspace ws(model.layer_sizes());
  const double inv_n = 1.0 / static_cast<double>(targets_.size());
  double sse = 0.0;
  for (std::size_t t = 0; t < targets_.size(); ++t) {
    model.standardizer().apply(series_->row(t), ws.act[0]);
    const double r = forward_into(model.layers(), ws) - targets_[t];
    sse += r * r;
    backward_from(model.layers(), ws, 2.0 * r * inv_n, &grad, nullptr);
  }
  for (std::size_t l = 0; l < model.layers().size(); ++l) {
    const auto& w = model.layers()[l].weights;
    for (std::size_t k = 0; k < w.size(); ++k) grad.weights[l][k] += l1_ * sign(w[k]) + 2.0 * l2_ * w[k];
  }
  return sse * inv_n + penalty(model.layers(), l1_, l2_);
}

std::vector<double> input_gradient(const TimePredictor& model, std::span<const double> raw_row) {
  if (raw_row.size() != model.input_width()) {
    fail(ErrorKind::Shape, "sample has " + std::to_string(raw_row.size()) + " features, model expects " +
                               std::to_string(model.input_width()));
  }
  Workspace ws(model.layer_sizes());
  model.standardizer().apply(raw_row, ws.act[0]);
  forward_into(model.layers(), ws);
  std::vector<double> g;
  backward_from(model.layers(), ws, 1.0, nullptr, &g);
  for (std::size_t j = 0; j < g.size(); ++j) g[j] /= model.standardizer().scale[j];
  return g;
}

}  // namespace timepred
