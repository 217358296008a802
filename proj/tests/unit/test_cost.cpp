#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "timepred/cost.hpp"
#include "timepred/error.hpp"
#include "timepred/simd/kernels.hpp"

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

TimeSeriesMatrix shifted(const TimeSeriesMatrix& x, double offset) {
  std::vector<double> v(x.values().begin(), x.values().end());
  for (double& e : v) e += offset;
  return TimeSeriesMatrix(x.rows(), x.cols(), std::move(v));
}

}  // namespace

TEST_CASE("L2 cost closed forms") {
  CHECK(cost_l2(TimeSeriesMatrix::column({5, 5, 5}), 0, 3) == 0.0);
  CHECK(cost_l2(TimeSeriesMatrix::column({0, 2}), 0, 2) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(cost_l2(TimeSeriesMatrix(3, 2, {0, 0, 1, 1, 2, 2}), 0, 3) == doctest::Approx(4.0).epsilon(1e-15));
}

TEST_CASE("L2 prefix-sum cost matches the direct sum on every range") {
  const auto x = oracle::random_series(30, 3, 11, 2.0);
  const auto x_far = shifted(x, 1e3);
  const L2Cost c(x);
  const L2Cost c_far(x_far);
  for (std::size_t a = 0; a < 30; ++a) {
    for (std::size_t b = a + 1; b <= 30; ++b) {
      const double want = oracle::l2(x, a, b);
      CHECK(c(a, b) == doctest::Approx(want).epsilon(1e-10).scale(1.0));
      CHECK(cost_l2(x, a, b) == doctest::Approx(want).epsilon(1e-12).scale(1.0));
      CHECK(c(a, b) >= 0.0);
      // shift invariance holds up to prefix-sum cancellation
      CHECK(c_far(a, b) == doctest::Approx(want).epsilon(1e-6).scale(1.0));
    }
  }
}

TEST_CASE("L2 cost is superadditive under splits") {
  const auto x = oracle::random_series(25, 2, 3);
  const L2Cost c(x);
  for (std::size_t a = 0; a < 25; ++a) {
    for (std::size_t b = a + 2; b <= 25; ++b) {
      for (std::size_t m = a + 1; m < b; ++m) CHECK(c(a, b) + 1e-12 >= c(a, m) + c(m, b));
    }
  }
}

TEST_CASE("AR cost closed forms") {
  std::vector<double> ar1{1.0};
  for (int i = 1; i < 10; ++i) ar1.push_back(0.5 * ar1.back());
  CHECK(cost_ar(TimeSeriesMatrix::column(ar1), 0, 10, 1) == doctest::Approx(0.0).epsilon(1e-9).scale(1.0));
  CHECK(std::abs(cost_ar(TimeSeriesMatrix::column(ar1), 0, 10, 1)) < 1e-9);
  CHECK(std::abs(cost_ar(TimeSeriesMatrix::column({3, 3, 3, 3}), 0, 4, 1)) < 1e-12);
}

TEST_CASE("AR cost matches a QR least-squares oracle") {
  const auto x = oracle::random_series(50, 1, 21);
  const double want = oracle::ar(x, 0, 50, 1);
  CHECK(cost_ar(x, 0, 50, 1) == doctest::Approx(want).epsilon(1e-8));

  const auto y = oracle::random_series(80, 3, 22);
  for (std::size_t p : {1u, 2u, 3u}) {
    const ArCost c(y, p);
    for (auto [a, b] : {std::pair{0, 80}, {5, 40}, {10, 10 + static_cast<int>(p) + 4}, {30, 77}}) {
      CAPTURE(p);
      CAPTURE(a);
      CAPTURE(b);
      // p + 4 rows leave an exactly solvable system; compare on an absolute scale there.
      CHECK(c(a, b) == doctest::Approx(oracle::ar(y, a, b, p)).epsilon(1e-8).scale(1.0));
    }
  }
}

TEST_CASE("AR cost survives rank-deficient designs") {
  // alternating series: the lag column is collinear with the intercept
  const auto x = TimeSeriesMatrix::column({1, 1, 1, 1, 1, 2, 2, 2, 2});
  const double c = cost_ar(x, 0, 5, 1);
  CHECK(std::isfinite(c));
  CHECK(c >= 0.0);
  CHECK(c < 1e-6);
}

TEST_CASE("RBF cost closed forms") {
  CHECK(std::abs(cost_rbf(TimeSeriesMatrix(4, 2, {1, 2, 1, 2, 1, 2, 1, 2}), 0, 4, 0.7)) < 1e-15);
  CHECK(cost_rbf(TimeSeriesMatrix::column({0, 1}), 0, 2, 1.0) ==
        doctest::Approx(1.0 - std::exp(-0.5)).epsilon(1e-14));
}

TEST_CASE("RBF cost matches the double-loop Gram oracle on every ISA") {
  const auto x = oracle::random_series(40, 3, 5);
  const simd::Isa original = simd::active_isa();
  for (simd::Isa isa : {simd::Isa::Scalar, simd::Isa::Avx2, simd::Isa::Avx512}) {
    if (!simd::select_isa(isa)) continue;
    CAPTURE(simd::to_string(isa));
    const RbfCost c(x, 1.3);
    CHECK(c(3, 8) == doctest::Approx(oracle::rbf(x, 3, 8, 1.3)).epsilon(1e-12));
    for (std::size_t a = 0; a < 40; a += 7) {
      for (std::size_t b = a + 1; b <= 40; b += 5) {
        CHECK(c(a, b) == doctest::Approx(oracle::rbf(x, a, b, 1.3)).epsilon(1e-11).scale(1e-12));
      }
    }
  }
  simd::select_isa(original);
}

TEST_CASE("RBF cost is nonnegative and shift invariant") {
  const auto x = oracle::random_series(20, 2, 8);
  const auto y = shifted(x, 17.0);
  const RbfCost cx(x, 0.9), cy(y, 0.9);
  for (std::size_t a = 0; a < 20; a += 3) {
    for (std::size_t b = a + 1; b <= 20; ++b) {
      CHECK(cx(a, b) >= -1e-12);
      CHECK(cx(a, b) == doctest::Approx(cy(a, b)).epsilon(1e-12).scale(1e-12));
    }
  }
}

TEST_CASE("costs depend only on rows inside the segment") {
  auto x = oracle::random_series(30, 2, 9);
  std::vector<double> v(x.values().begin(), x.values().end());
  for (std::size_t j = 0; j < 2; ++j) v[2 + j] = 99.0;       // row 1
  for (std::size_t j = 0; j < 2; ++j) v[25 * 2 + j] = -50.0;  // row 25
  const TimeSeriesMatrix y(30, 2, std::move(v));
  for (const CostKind& kind : {CostKind::l2(), CostKind::ar(2), CostKind::rbf(1.0)}) {
    const auto cx = make_segment_cost(x, kind);
    const auto cy = make_segment_cost(y, kind);
    // Prefix sums carry the outside rows, so only rounding may differ.
    CHECK((*cx)(4, 20) == doctest::Approx((*cy)(4, 20)).epsilon(1e-11));
  }
}

TEST_CASE("cost ranges are validated") {
  const auto x = oracle::random_series(10, 1, 1);
  CHECK(kind_of([&] { cost_l2(x, 3, 3); }) == ErrorKind::InvalidRange);
  CHECK(kind_of([&] { cost_rbf(x, 4, 2, 1.0); }) == ErrorKind::InvalidRange);
  CHECK(kind_of([&] { cost_l2(x, 0, 11); }) == ErrorKind::InvalidRange);
  CHECK(kind_of([&] { cost_ar(x, 0, 2, 2); }) == ErrorKind::InvalidRange);
}

TEST_CASE("cost kinds parse and validate") {
  CHECK(CostKind::parse("l2").type == CostKind::Type::L2);
  CHECK(CostKind::parse("ar:3").ar_order == 3);
  CHECK(*CostKind::parse("rbf:0.5").bandwidth == 0.5);
  CHECK_FALSE(CostKind::parse("rbf").bandwidth.has_value());
  CHECK(kind_of([] { CostKind::parse("ar:0"); }) == ErrorKind::Config);
  CHECK(kind_of([] { CostKind::parse("rbf:-1"); }) == ErrorKind::Config);
  CHECK(kind_of([] { CostKind::parse("huber"); }) == ErrorKind::Config);
  CHECK(kind_of([] { CostKind::ar(0).validate(); }) == ErrorKind::Config);
}

TEST_CASE("median heuristic bandwidth") {
  CHECK(median_heuristic_bandwidth(TimeSeriesMatrix(2, 2, {0, 0, 1, 1})) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(median_heuristic_bandwidth(TimeSeriesMatrix(3, 1, {4, 4, 4})) == 1.0);

  const auto x = oracle::random_series(100, 4, 13);
  std::vector<double> d2;
  for (std::size_t a = 0; a < 100; ++a) {
    for (std::size_t b = a + 1; b < 100; ++b) {
      double s = 0.0;
      for (std::size_t j = 0; j < 4; ++j) s += (x(a, j) - x(b, j)) * (x(a, j) - x(b, j));
      d2.push_back(s);
    }
  }
  std::sort(d2.begin(), d2.end());
  const double median = 0.5 * (d2[d2.size() / 2 - 1] + d2[d2.size() / 2]);
  CHECK(median_heuristic_bandwidth(x, 100) == doctest::Approx(std::sqrt(median / 2.0)).epsilon(1e-12));
  // sub-sampling stays close and is seeded
  const double sub = median_heuristic_bandwidth(x, 40, 3);
  CHECK(sub == median_heuristic_bandwidth(x, 40, 3));
  CHECK(std::abs(sub / std::sqrt(median / 2.0) - 1.0) < 0.15);
}

TEST_CASE("make_segment_cost resolves the RBF bandwidth") {
  const auto x = oracle::random_series(50, 2, 4);
  const auto c = make_segment_cost(x, CostKind::rbf());
  const auto* rbf = dynamic_cast<const RbfCost*>(c.get());
  REQUIRE(rbf != nullptr);
  CHECK(rbf->bandwidth() == median_heuristic_bandwidth(x));
  CHECK(make_segment_cost(x, CostKind::ar(3))->min_size() == 4);
}
