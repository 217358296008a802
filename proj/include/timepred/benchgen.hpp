#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "timepred/matrix.hpp"

namespace timepred {

enum class Family { MeanShift, PwLinear, VarianceShift, ArShift, CovShift };

inline constexpr Family kAllFamilies[] = {Family::MeanShift, Family::PwLinear, Family::VarianceShift,
                                          Family::ArShift, Family::CovShift};

/// "mean_shift", "pw_linear", "variance_shift", "ar_shift", "cov_shift".
std::string to_string(Family family);
Family parse_family(const std::string& name);

/// Magnitudes of the planted change for each family.
struct GeneratorParams {
  double mean_shift_delta = 2.0;

  std::size_t pw_sources = 5;
  double pw_noise_sd = 0.1;
  double pw_max_cosine = 0.5;  // <a, b> bound between the two regimes

  double variance_lo = 0.5;  // sigma^2 ~ U[lo, hi]
  double variance_hi = 2.0;

  double ar_phi_max = 0.7;  // phi ~ U[-max, max]
  double ar_min_gap = 0.4;  // |phi_new - phi_old| >= gap for affected dims

  double cov_spectrum_lo = 0.5;  // shared eigenvalues ~ U[lo, hi]
  double cov_spectrum_hi = 2.0;

  /// Control case: both regimes identical (a = b, sigma and phi unchanged,
  /// Sigma_1 = Sigma_2, delta = 0). Datasets are flagged degenerate.
  bool no_change = false;
};

struct ProblemSpec {
  Family family = Family::MeanShift;
  std::size_t length = 10000;
  std::size_t dims = 100;
  std::uint64_t seed = 0;
  double cp_lo = 0.25;
  double cp_hi = 0.75;
  GeneratorParams params;

  void validate() const;
};

struct LabeledDataset {
  TimeSeriesMatrix series;
  std::size_t true_cp = 0;
  Family family = Family::MeanShift;
  std::uint64_t seed = 0;
  std::vector<std::size_t> affected_dims;
  /// No change present by construction; excluded from precision scoring.
  bool degenerate = false;
};

LabeledDataset gen_mean_shift(const ProblemSpec& spec);
LabeledDataset gen_pw_linear(const ProblemSpec& spec);
LabeledDataset gen_variance_shift(const ProblemSpec& spec);
LabeledDataset gen_ar_shift(const ProblemSpec& spec);
LabeledDataset gen_cov_shift(const ProblemSpec& spec);

/// Dispatches on spec.family.
LabeledDataset generate(const ProblemSpec& spec);

}  // namespace timepred
