#include "timepred/benchgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "timepred/error.hpp"
#include "timepred/rng.hpp"

namespace timepred {
namespace {

// Stream layout under the per-dataset key: one stream for structural draws
// (t*, which dimensions, coefficients), one per dimension for the noise.
constexpr std::uint64_t kLayoutStream = 1;
constexpr std::uint64_t kNoiseStream = 2;

struct Streams {
  std::uint64_t key;

  explicit Streams(const ProblemSpec& spec)
      : key(derive_seed(spec.seed, {static_cast<std::uint64_t>(spec.family) + 1})) {}

  Rng layout() const { return Rng(derive_seed(key, {kLayoutStream})); }
  Rng noise(std::size_t dim) const { return Rng(derive_seed(key, {kNoiseStream, dim})); }
};

std::size_t draw_cp(const ProblemSpec& spec, Rng& rng) {
  const double n = static_cast<double>(spec.length);
  const auto lo = static_cast<std::size_t>(std::ceil(spec.cp_lo * n));
  const auto hi = static_cast<std::size_t>(std::floor(spec.cp_hi * n));
  return static_cast<std::size_t>(rng.uniform_int(lo, hi));
}

// First k entries of a seeded permutation of 0..n-1, sorted.
std::vector<std::size_t> choose(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + rng.uniform_int(0, n - 1 - i)]);
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::vector<double> unit_vector(std::size_t m, Rng& rng) {
  std::vector<double> v(m);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (double& x : v) {
      x = rng.normal();
      norm += x * x;
    }
  } while (norm == 0.0);
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

// Random orthogonal d x d matrix (row-major) by Gram-Schmidt on a Gaussian
// matrix; columns are orthonormal.
std::vector<double> random_orthogonal(std::size_t d, Rng& rng) {
  std::vector<double> q(d * d);
  for (double& x : q) x = rng.normal();
  for (std::size_t c = 0; c < d; ++c) {
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t p = 0; p < c; ++p) {
        double dot = 0.0;
        for (std::size_t r = 0; r < d; ++r) dot += q[r * d + c] * q[r * d + p];
        for (std::size_t r = 0; r < d; ++r) q[r * d + c] -= dot * q[r * d + p];
      }
    }
    double norm = 0.0;
    for (std::size_t r = 0; r < d; ++r) norm += q[r * d + c] * q[r * d + c];
    norm = std::sqrt(norm);
    for (std::size_t r = 0; r < d; ++r) q[r * d + c] /= norm;
  }
  return q;
}

LabeledDataset finish(const ProblemSpec& spec, std::vector<double> values, std::size_t cp,
                      std::vector<std::size_t> affected) {
  LabeledDataset ds;
  ds.series = TimeSeriesMatrix(spec.length, spec.dims, std::move(values));
  ds.true_cp = cp;
  ds.family = spec.family;
  ds.seed = spec.seed;
  ds.affected_dims = std::move(affected);
  ds.degenerate = spec.params.no_change;
  return ds;
}

ProblemSpec with_family(ProblemSpec spec, Family family) {
  spec.family = family;
  return spec;
}

}  // namespace

std::string to_string(Family family) {
  switch (family) {
    case Family::MeanShift: return "mean_shift";
    case Family::PwLinear: return "pw_linear";
    case Family::VarianceShift: return "variance_shift";
    case Family::ArShift: return "ar_shift";
    case Family::CovShift: return "cov_shift";
  }
  return "unknown";
}

Family parse_family(const std::string& name) {
  for (Family f : kAllFamilies) {
    if (to_string(f) == name) return f;
  }
  fail(ErrorKind::Config, "unknown family '" + name +
                              "' (expected mean_shift, pw_linear, variance_shift, ar_shift or cov_shift)");
}

void ProblemSpec::validate() const {
  if (length < 100) fail(ErrorKind::Config, "benchmark series need T >= 100");
  if (dims < 2) fail(ErrorKind::Config, "benchmark series need d >= 2");
  if (!(cp_lo > 0.0 && cp_lo < cp_hi && cp_hi < 1.0)) {
    fail(ErrorKind::Config, "change-point window must satisfy 0 < lo < hi < 1");
  }
  const auto& p = params;
  if (!(p.variance_lo > 0.0 && p.variance_lo <= p.variance_hi)) fail(ErrorKind::Config, "bad variance range");
  if (!(p.cov_spectrum_lo > 0.0 && p.cov_spectrum_lo <= p.cov_spectrum_hi)) {
    fail(ErrorKind::Config, "bad covariance spectrum range");
  }
  if (!(p.ar_phi_max > 0.0 && p.ar_phi_max < 1.0)) fail(ErrorKind::Config, "AR coefficient bound must lie in (0, 1)");
  if (!(p.ar_min_gap >= 0.0 && p.ar_min_gap <= p.ar_phi_max)) {
    fail(ErrorKind::Config, "AR gap must lie in [0, phi_max] so a redraw always exists");
  }
  if (p.pw_sources < 1) fail(ErrorKind::Config, "piecewise-linear family needs at least one source");
  if (!(p.pw_max_cosine > -1.0 && p.pw_max_cosine <= 1.0)) fail(ErrorKind::Config, "bad cosine bound");
}

LabeledDataset gen_mean_shift(const ProblemSpec& spec) {
  spec.validate();
  const Streams streams(with_family(spec, Family::MeanShift));
  Rng layout = streams.layout();
  const std::size_t n = spec.length, d = spec.dims;
  const std::size_t cp = draw_cp(spec, layout);
  const std::size_t dim = layout.uniform_int(0, d - 1);
  const double delta = spec.params.no_change ? 0.0 : spec.params.mean_shift_delta;

  std::vector<double> x(n * d);
  for (std::size_t j = 0; j < d; ++j) {
    Rng noise = streams.noise(j);
    for (std::size_t t = 0; t < n; ++t) x[t * d + j] = noise.normal();
  }
  for (std::size_t t = cp; t < n; ++t) x[t * d + dim] += delta;
  return finish(with_family(spec, Family::MeanShift), std::move(x), cp, {dim});
}

LabeledDataset gen_pw_linear(const ProblemSpec& spec) {
  spec.validate();
  const Streams streams(with_family(spec, Family::PwLinear));
  Rng layout = streams.layout();
  const std::size_t n = spec.length, d = spec.dims;
  const std::size_t cp = draw_cp(spec, layout);
  const std::size_t m = std::min(spec.params.pw_sources, d - 1);

  // choose() returns sorted indices; the target is a random member of a
  // random (m+1)-subset, the rest are its sources.
  std::vector<std::size_t> picked = choose(d, m + 1, layout);
  const std::size_t target_pos = layout.uniform_int(0, m);
  const std::size_t target = picked[target_pos];
  std::vector<std::size_t> sources;
  for (std::size_t i = 0; i <= m; ++i) {
    if (i != target_pos) sources.push_back(picked[i]);
  }

  const std::vector<double> before = unit_vector(m, layout);
  std::vector<double> after = before;
  if (!spec.params.no_change) {
    for (;;) {
      after = unit_vector(m, layout);
      double cosine = 0.0;
      for (std::size_t i = 0; i < m; ++i) cosine += before[i] * after[i];
      if (cosine <= spec.params.pw_max_cosine) break;
    }
  }

  std::vector<double> x(n * d);
  for (std::size_t j = 0; j < d; ++j) {
    if (j == target) continue;
    Rng noise = streams.noise(j);
    for (std::size_t t = 0; t < n; ++t) x[t * d + j] = noise.normal();
  }
  Rng noise = streams.noise(target);
  for (std::size_t t = 0; t < n; ++t) {
    const std::vector<double>& coef = t < cp ? before : after;
    double v = 0.0;
    for (std::size_t i = 0; i < m; ++i) v += coef[i] * x[t * d + sources[i]];
    x[t * d + target] = v + spec.params.pw_noise_sd * noise.normal();
  }

  std::vector<std::size_t> affected{target};
  affected.insert(affected.end(), sources.begin(), sources.end());
  return finish(with_family(spec, Family::PwLinear), std::move(x), cp, std::move(affected));
}

LabeledDataset gen_variance_shift(const ProblemSpec& spec) {
  spec.validate();
  const Streams streams(with_family(spec, Family::VarianceShift));
  Rng layout = streams.layout();
  const std::size_t n = spec.length, d = spec.dims;
  const std::size_t cp = draw_cp(spec, layout);
  const auto& p = spec.params;

  std::vector<double> sd_before(d), sd_after(d);
  for (std::size_t j = 0; j < d; ++j) sd_before[j] = std::sqrt(layout.uniform(p.variance_lo, p.variance_hi));
  sd_after = sd_before;
  const std::vector<std::size_t> affected = choose(d, d / 2, layout);
  if (!p.no_change) {
    for (std::size_t j : affected) sd_after[j] = std::sqrt(layout.uniform(p.variance_lo, p.variance_hi));
  }

  std::vector<double> x(n * d);
  for (std::size_t j = 0; j < d; ++j) {
    Rng noise = streams.noise(j);
    for (std::size_t t = 0; t < n; ++t) x[t * d + j] = (t < cp ? sd_before[j] : sd_after[j]) * noise.normal();
  }
  return finish(with_family(spec, Family::VarianceShift), std::move(x), cp, affected);
}

LabeledDataset gen_ar_shift(const ProblemSpec& spec) {
  spec.validate();
  const Streams streams(with_family(spec, Family::ArShift));
  Rng layout = streams.layout();
  const std::size_t n = spec.length, d = spec.dims;
  const std::size_t cp = draw_cp(spec, layout);
  const auto& p = spec.params;

  std::vector<double> phi_before(d), phi_after(d);
  for (std::size_t j = 0; j < d; ++j) phi_before[j] = layout.uniform(-p.ar_phi_max, p.ar_phi_max);
  phi_after = phi_before;
  const std::vector<std::size_t> affected = choose(d, d / 2, layout);
  if (!p.no_change) {
    for (std::size_t j : affected) {
      double candidate;
      do {
        candidate = layout.uniform(-p.ar_phi_max, p.ar_phi_max);
      } while (std::abs(candidate - phi_before[j]) < p.ar_min_gap);
      phi_after[j] = candidate;
    }
  }

  std::vector<double> x(n * d);
  for (std::size_t j = 0; j < d; ++j) {
    Rng noise = streams.noise(j);
    // start from the stationary distribution of the first regime
    double state = noise.normal() / std::sqrt(1.0 - phi_before[j] * phi_before[j]);
    x[j] = state;
    for (std::size_t t = 1; t < n; ++t) {
      state = (t < cp ? phi_before[j] : phi_after[j]) * state + noise.normal();
      x[t * d + j] = state;
    }
  }
  return finish(with_family(spec, Family::ArShift), std::move(x), cp, affected);
}

LabeledDataset gen_cov_shift(const ProblemSpec& spec) {
  spec.validate();
  const Streams streams(with_family(spec, Family::CovShift));
  Rng layout = streams.layout();
  const std::size_t n = spec.length, d = spec.dims;
  const std::size_t cp = draw_cp(spec, layout);
  const auto& p = spec.params;

  std::vector<double> root_spectrum(d);
  for (double& s : root_spectrum) s = std::sqrt(layout.uniform(p.cov_spectrum_lo, p.cov_spectrum_hi));
  const std::vector<double> q_before = random_orthogonal(d, layout);
  const std::vector<double> q_after = p.no_change ? q_before : random_orthogonal(d, layout);

  // x_t = Q sqrt(D) z_t, with z's coordinates drawn from per-dimension streams.
  std::vector<double> z(n * d);
  for (std::size_t j = 0; j < d; ++j) {
    Rng noise = streams.noise(j);
    for (std::size_t t = 0; t < n; ++t) z[t * d + j] = root_spectrum[j] * noise.normal();
  }
  std::vector<double> x(n * d, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    const std::vector<double>& q = t < cp ? q_before : q_after;
    for (std::size_t r = 0; r < d; ++r) {
      double v = 0.0;
      for (std::size_t c = 0; c < d; ++c) v += q[r * d + c] * z[t * d + c];
      x[t * d + r] = v;
    }
  }
  std::vector<std::size_t> affected(d);
  std::iota(affected.begin(), affected.end(), std::size_t{0});
  return finish(with_family(spec, Family::CovShift), std::move(x), cp, std::move(affected));
}

LabeledDataset generate(const ProblemSpec& spec) {
  switch (spec.family) {
    case Family::MeanShift: return gen_mean_shift(spec);
    case Family::PwLinear: return gen_pw_linear(spec);
    case Family::VarianceShift: return gen_variance_shift(spec);
    case Family::ArShift: return gen_ar_shift(spec);
    case Family::CovShift: return gen_cov_shift(spec);
  }
  fail(ErrorKind::Config, "unknown family");
}

}  // namespace timepred
