#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "timepred/benchgen.hpp"
#include "timepred/cost.hpp"
#include "timepred/model.hpp"
#include "timepred/segment.hpp"

namespace timepred {

enum class Method { Vanilla, WangProjection, TimePred };

struct MethodId {
  Method method = Method::TimePred;
  CostKind cost = CostKind::l2();

  /// "vanilla/l2", "wang/rbf", "timepred/ar", ...
  std::string id() const;
  static MethodId parse(const std::string& id);
  /// All nine method x cost combinations.
  static std::vector<MethodId> all();
};

/// Greedy closest-first one-to-one matching of predicted to true change
/// points within |p - t| <= tol; returns matched / predicted. 1.0 when both
/// lists are empty, 0.0 when there are predictions but no truths or no
/// predictions but some truths.
double precision_at_tolerance(const std::vector<std::size_t>& predicted,
                              const std::vector<std::size_t>& truth, std::size_t tol);

template <class T>
struct Timed {
  T value;
  double seconds = 0.0;
  std::string_view label;
};

/// Runs thunk and measures its wall time on the monotonic clock.
template <class F>
auto timer(std::string_view label, F&& thunk) {
  using R = std::invoke_result_t<F>;
  const auto start = std::chrono::steady_clock::now();
  if constexpr (std::is_void_v<R>) {
    thunk();
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
    return Timed<std::monostate>{{}, dt.count(), label};
  } else {
    R value = thunk();
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
    return Timed<R>{std::move(value), dt.count(), label};
  }
}

struct BenchmarkConfig {
  std::vector<Family> families{std::begin(kAllFamilies), std::end(kAllFamilies)};
  std::vector<MethodId> methods = MethodId::all();
  std::size_t n_reps = 20;
  std::size_t length = 2000;
  std::size_t dims = 20;
  std::size_t tolerance = 20;
  std::uint64_t master_seed = 0;
  double cp_lo = 0.25;
  double cp_hi = 0.75;
  GeneratorParams generator;
  TrainConfig train;  // seed is replaced by a per-dataset derived seed
  std::vector<std::size_t> hidden = kDefaultHidden;
  std::optional<std::size_t> jump;      // default: SegmentationConfig::defaults
  std::optional<std::size_t> min_size;  // default: SegmentationConfig::defaults
  std::size_t jobs = 1;

  /// T=2000, d=20, 20 reps, tolerance 20.
  static BenchmarkConfig desk_scale();
  /// T=10000, d=100, 100 reps, tolerance 100.
  static BenchmarkConfig paper_scale();

  void validate() const;
};

struct MethodResult {
  std::string method;
  std::vector<std::size_t> breakpoints;
  double precision = 0.0;
  double feature_seconds = 0.0;  // training + prediction, or projection
  double segment_seconds = 0.0;
  double total_seconds = 0.0;
  std::string error;  // empty on success

  bool failed() const { return !error.empty(); }
};

struct DatasetRecord {
  Family family = Family::MeanShift;
  std::size_t rep = 0;
  std::uint64_t seed = 0;
  std::size_t true_cp = 0;
  bool degenerate = false;
  std::vector<MethodResult> results;  // in config.methods order
};

struct CellSummary {
  Family family = Family::MeanShift;
  std::string method;
  double precision = 0.0;   // mean over scored datasets
  std::size_t n_datasets = 0;  // scored (successful, non-degenerate)
  std::size_t n_failed = 0;
  double mean_runtime_seconds = 0.0;
  double mean_feature_seconds = 0.0;
  double mean_segment_seconds = 0.0;
  double total_runtime_seconds = 0.0;
};

struct BenchmarkReport {
  BenchmarkConfig config;
  std::vector<DatasetRecord> datasets;  // ordered by (family, rep)
  std::vector<CellSummary> cells;       // ordered by (family, method)

  const CellSummary& cell(Family family, const std::string& method) const;
};

/// Seed of dataset (family, rep); independent of the method grid.
std::uint64_t dataset_seed(std::uint64_t master_seed, Family family, std::size_t rep);

/// Runs every method on one dataset. Failures are recorded per method.
DatasetRecord run_dataset(const BenchmarkConfig& config, Family family, std::size_t rep);

/// Full grid. Datasets are spread over config.jobs workers; results are keyed
/// by (family, rep) so the report does not depend on scheduling.
BenchmarkReport run_benchmark(const BenchmarkConfig& config);

/// Recomputes cell summaries from dataset records.
std::vector<CellSummary> summarize(const BenchmarkConfig& config, const std::vector<DatasetRecord>& datasets);

/// JSON with parameter block and per-dataset detail. Timing fields are
/// omitted when include_timings is false.
std::string report_to_json(const BenchmarkReport& report, bool include_timings = true);
/// One row per (family, method) cell, preceded by '#' provenance lines.
std::string report_to_csv(const BenchmarkReport& report);
/// The parameter block as a JSON object text.
std::string config_to_json(const BenchmarkConfig& config);
/// Overlays the keys present in a parameter block (as written by
/// config_to_json) onto base. Unknown keys are a Config error.
BenchmarkConfig config_from_json(const std::string& text, BenchmarkConfig base = BenchmarkConfig::desk_scale());

}  // namespace timepred
