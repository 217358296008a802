#include <doctest.h>

#include <cmath>
#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "timepred/cost.hpp"
#include "timepred/error.hpp"
#include "timepred/model.hpp"
#include "timepred/segment.hpp"

using namespace timepred;

namespace {

ErrorKind kind_of(const std::function<void()>& thunk) {
  try {
    thunk();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return ErrorKind::Io;
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

double stddev(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / v.size());
}

TimeSeriesMatrix step_series(std::size_t length, std::size_t d, std::size_t cp, double height, unsigned seed) {
  auto x = oracle::random_series(length, d, seed);
  std::vector<double> v(x.values().begin(), x.values().end());
  for (std::size_t t = cp; t < length; ++t) v[t * d] += height;
  return TimeSeriesMatrix(length, d, std::move(v));
}

// Random weights and biases kept away from zero so the L1 term is smooth.
TimePredictor random_net(std::vector<std::size_t> sizes, unsigned seed) {
  TimePredictor net(sizes, Standardizer::identity(sizes.front()));
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> mag(0.2, 1.0);
  std::bernoulli_distribution neg(0.5);
  for (auto& layer : net.mutable_layers()) {
    for (double& w : layer.weights) w = neg(gen) ? -mag(gen) : mag(gen);
    for (double& b : layer.biases) b = 0.5 * (neg(gen) ? -mag(gen) : mag(gen));
  }
  return net;
}

double best_split_gain(const std::vector<double>& y) {
  const auto series = TimeSeriesMatrix::column(y);
  const L2Cost c(series);
  SegmentationConfig cfg;
  cfg.n_breakpoints = 1;
  const auto best = segment_dynp(c, cfg);
  return c(0, y.size()) - best.total_cost;
}

}  // namespace

TEST_CASE("normalized targets") {
  CHECK(normalized_targets(4) == std::vector<double>{0.25, 0.5, 0.75, 1.0});
  CHECK(normalized_targets(1) == std::vector<double>{1.0});
  CHECK(mean(normalized_targets(10000)) == doctest::Approx(0.50005).epsilon(1e-12));
}

TEST_CASE("hand-computed forward pass") {
  TimePredictor net({1, 1, 1}, Standardizer::identity(1));
  auto& layers = net.mutable_layers();
  layers[0].weights = {2.0};
  layers[0].biases = {-1.0};
  layers[1].weights = {3.0};
  layers[1].biases = {0.5};
  const double x = 1.0;
  CHECK(net.forward(std::span<const double>(&x, 1)) == 3.5);
}

TEST_CASE("zero-weight network predicts its output bias") {
  TimePredictor net({3, 4, 2, 1}, Standardizer::identity(3));
  net.mutable_layers().back().biases[0] = 0.37;
  const auto x = oracle::random_series(10, 3, 1);
  for (double v : predict(net, x).values) CHECK(v == 0.37);
}

TEST_CASE("standardizer floors tiny scales") {
  const auto st = Standardizer::fit(TimeSeriesMatrix(3, 2, {1, 5, 2, 5, 3, 5}));
  CHECK(st.mean[0] == doctest::Approx(2.0));
  CHECK(st.scale[0] == doctest::Approx(std::sqrt(2.0 / 3.0)));
  CHECK(st.scale[1] == 1e-12);
}

TEST_CASE("analytic gradient matches central finite differences") {
  for (unsigned seed = 0; seed < 5; ++seed) {
    CAPTURE(seed);
    const auto x = oracle::random_series(12, 3, 40 + seed);
    TimePredictor net = random_net({3, 4, 1}, seed);
    const TrainingObjective obj(x, 1e-3, 1e-2);
    ParameterGradient g;
    obj.value_and_gradient(net, g);
    double worst = 0.0;
    const double h = 1e-5;
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
      for (int which = 0; which < 2; ++which) {
        auto& params = which == 0 ? net.mutable_layers()[l].weights : net.mutable_layers()[l].biases;
        const auto& analytic = which == 0 ? g.weights[l] : g.biases[l];
        for (std::size_t k = 0; k < params.size(); ++k) {
          const double keep = params[k];
          params[k] = keep + h;
          const double up = obj.value(net);
          params[k] = keep - h;
          const double down = obj.value(net);
          params[k] = keep;
          const double fd = (up - down) / (2 * h);
          worst = std::max(worst, std::abs(fd - analytic[k]) / std::max(std::abs(fd), 1e-6));
        }
      }
    }
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("input gradient matches finite differences") {
  TimePredictor net = random_net({4, 5, 3, 1}, 9);
  std::vector<double> x{0.3, -0.2, 0.8, 0.1};
  const auto g = input_gradient(net, x);
  for (std::size_t i = 0; i < 4; ++i) {
    auto up = x, down = x;
    up[i] += 1e-6;
    down[i] -= 1e-6;
    const double fd = (net.forward(up) - net.forward(down)) / 2e-6;
    CHECK(g[i] == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("fit is deterministic and predict reproduces the fitted values") {
  const auto x = step_series(300, 4, 150, 3.0, 5);
  TrainConfig cfg;
  cfg.seed = 11;
  cfg.batch_size = 64;
  const auto a = fit(x, cfg);
  const auto b = fit(x, cfg);
  CHECK(a.same_parameters(b));
  CHECK(predict(a, x).values == a.fitted_values());
  CHECK(predict(a, x).source_length == 300);
  cfg.seed = 12;
  CHECK_FALSE(fit(x, cfg).same_parameters(a));
}

TEST_CASE("training loss decreases") {
  const auto x = step_series(500, 5, 200, 2.0, 6);
  const auto m = fit(x, TrainConfig{});
  REQUIRE(m.loss_history().size() == TrainConfig{}.epochs);
  CHECK(m.loss_history().back() <= m.loss_history().front());
}

TEST_CASE("a step in one dimension produces a mean shift in the predictions") {
  const std::size_t n = 1000;
  const auto x = step_series(n, 5, n / 2, 5.0, 8);
  TrainConfig cfg;
  cfg.seed = 3;
  const auto y = predict(fit(x, cfg), x).values;
  const std::vector<double> before(y.begin(), y.begin() + n / 2), after(y.begin() + n / 2, y.end());
  CHECK(mean(after) - mean(before) >= 0.2);
}

TEST_CASE("pure noise with strong regularization predicts the average index") {
  const auto x = oracle::random_series(2000, 20, 99);
  TrainConfig cfg;
  cfg.seed = 4;
  cfg.l1_weight = 1e-3;
  cfg.l2_weight = 1e-2;
  const auto y = predict(fit(x, cfg), x).values;
  CHECK(std::abs(mean(y) - 0.5) < 0.02);
  CHECK(stddev(y) < 0.1);
}

TEST_CASE("linear head recovers a realizable target") {
  std::vector<double> v = normalized_targets(400);
  const auto x = TimeSeriesMatrix::column(v);
  TrainConfig cfg;
  cfg.l1_weight = 0.0;
  cfg.l2_weight = 0.0;
  cfg.epochs = 100;
  cfg.batch_size = 32;
  const auto m = linear_head_fit(x, cfg);
  CHECK(m.layer_sizes() == std::vector<std::size_t>{1, 1});
  double mse = 0.0;
  for (std::size_t t = 0; t < v.size(); ++t) mse += (m.fitted_values()[t] - v[t]) * (m.fitted_values()[t] - v[t]);
  CHECK(mse / v.size() < 1e-6);
}

TEST_CASE("huge L1 drives the linear head to the mean target") {
  const auto x = step_series(400, 3, 200, 2.0, 2);
  TrainConfig cfg;
  cfg.l1_weight = 10.0;
  const auto m = linear_head_fit(x, cfg);
  for (double w : m.layers()[0].weights) CHECK(std::abs(w) < 1e-6);
  const double target_mean = mean(normalized_targets(400));
  for (double y : m.fitted_values()) CHECK(y == doctest::Approx(target_mean).epsilon(1e-3));
}

TEST_CASE("larger L1 never increases the total absolute weight") {
  const auto x = step_series(400, 6, 150, 1.5, 12);
  double previous = std::numeric_limits<double>::infinity();
  for (double l1 : {1e-4, 1e-3, 1e-2}) {
    TrainConfig cfg;
    cfg.l1_weight = l1;
    cfg.seed = 1;
    const auto m = fit(x, cfg);
    double total = 0.0;
    for (const auto& layer : m.layers()) {
      for (double w : layer.weights) total += std::abs(w);
    }
    CHECK(total <= previous + 1e-6);
    previous = total;
  }
}

TEST_CASE("shuffling time destroys the change signal") {
  const std::size_t n = 1000;
  const auto x = step_series(n, 5, 400, 2.0, 21);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), std::mt19937(5));
  std::vector<double> v(n * 5);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t j = 0; j < 5; ++j) v[t * 5 + j] = x(perm[t], j);
  }
  const TimeSeriesMatrix shuffled(n, 5, std::move(v));
  TrainConfig cfg;
  cfg.seed = 2;
  const double gain = best_split_gain(predict(fit(x, cfg), x).values);
  const double gain_shuffled = best_split_gain(predict(fit(shuffled, cfg), shuffled).values);
  CHECK(gain_shuffled < gain);
}

TEST_CASE("model files round-trip bit for bit") {
  const auto x = step_series(200, 3, 100, 2.0, 1);
  TrainConfig cfg;
  cfg.batch_size = 50;
  const auto m = fit(x, cfg);
  const auto bytes = m.serialize();
  REQUIRE(bytes.size() > 4);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "TPM1");
  const auto back = TimePredictor::deserialize(bytes);
  CHECK(back.same_parameters(m));
  CHECK(back.serialize() == bytes);
  CHECK(predict(back, x).values == predict(m, x).values);

  auto truncated = bytes;
  truncated.resize(bytes.size() - 3);
  CHECK(kind_of([&] { TimePredictor::deserialize(truncated); }) == ErrorKind::Format);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK(kind_of([&] { TimePredictor::deserialize(bad_magic); }) == ErrorKind::Format);
}

TEST_CASE("training configuration and shapes are validated") {
  const auto x = oracle::random_series(50, 2, 1);
  TrainConfig cfg;
  cfg.batch_size = 51;
  CHECK(kind_of([&] { fit(x, cfg); }) == ErrorKind::Config);
  cfg = TrainConfig{};
  cfg.batch_size = 10;
  cfg.epochs = 0;
  CHECK(kind_of([&] { fit(x, cfg); }) == ErrorKind::Config);
  cfg.epochs = 1;
  const std::vector<std::size_t> zero{0};
  CHECK(kind_of([&] { fit(x, cfg, zero); }) == ErrorKind::Config);
  const auto m = fit(x, cfg);
  CHECK(kind_of([&] { predict(m, oracle::random_series(5, 3, 1)); }) == ErrorKind::Shape);
}

TEST_CASE("divergence is reported with the epoch") {
  const auto x = step_series(200, 3, 100, 50.0, 3);
  TrainConfig cfg;
  cfg.learning_rate = 1e6;
  cfg.batch_size = 20;
  try {
    fit(x, cfg);
    FAIL("expected divergence");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Divergence);
    CHECK(std::string(e.what()).find("epoch 1") != std::string::npos);
  }
}
