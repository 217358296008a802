// timepred command-line front end: gen, detect, fit, explain, bench.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "timepred/attribution.hpp"
#include "timepred/baselines.hpp"
#include "timepred/benchgen.hpp"
#include "timepred/error.hpp"
#include "timepred/harness.hpp"
#include "timepred/matrix_io.hpp"
#include "timepred/model.hpp"
#include "timepred/segment.hpp"

using nlohmann::ordered_json;
using namespace timepred;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kFormat = 2, kInfeasible = 3, kNumerical = 4 };

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Format:
    case ErrorKind::Io: return kFormat;
    case ErrorKind::Infeasible: return kInfeasible;
    case ErrorKind::Divergence: return kNumerical;
    case ErrorKind::InvalidRange:
    case ErrorKind::Shape:
    case ErrorKind::Config: return kUsage;
  }
  return kUsage;
}

struct TrainFlags {
  double l1 = TrainConfig{}.l1_weight;
  double l2 = TrainConfig{}.l2_weight;
  double lr = TrainConfig{}.learning_rate;
  double momentum = TrainConfig{}.momentum;
  std::size_t epochs = TrainConfig{}.epochs;
  std::size_t batch = TrainConfig{}.batch_size;
  std::vector<std::size_t> hidden = kDefaultHidden;
  bool linear_head = false;
  CLI::Option* batch_option = nullptr;

  void add_to(CLI::App& app) {
    app.add_option("--l1", l1, "L1 weight penalty")->capture_default_str();
    app.add_option("--l2", l2, "L2 weight penalty")->capture_default_str();
    app.add_option("--lr", lr, "learning rate")->capture_default_str();
    app.add_option("--momentum", momentum, "SGD momentum")->capture_default_str();
    app.add_option("--epochs", epochs, "training epochs")->capture_default_str();
    batch_option = app.add_option("--batch", batch, "mini-batch size (default capped at the series length)")
                       ->capture_default_str();
    app.add_option("--hidden", hidden, "hidden layer widths, comma separated")->delimiter(',')->capture_default_str();
    app.add_flag("--linear-head", linear_head, "no hidden layers (elastic-net style linear head)");
  }

  TrainConfig config(std::uint64_t seed) const {
    TrainConfig c;
    c.l1_weight = l1;
    c.l2_weight = l2;
    c.learning_rate = lr;
    c.momentum = momentum;
    c.epochs = epochs;
    c.batch_size = batch;
    c.seed = seed;
    return c;
  }

  // An explicit --batch is validated as given; the default shrinks to fit short series.
  void fit_to(std::size_t rows) {
    if (batch_option != nullptr && batch_option->count() == 0) batch = std::min(batch, rows);
  }

  std::vector<std::size_t> widths() const { return linear_head ? std::vector<std::size_t>{} : hidden; }

  ordered_json to_json() const {
    return {{"l1_weight", l1}, {"l2_weight", l2}, {"learning_rate", lr}, {"momentum", momentum},
            {"epochs", epochs}, {"batch_size", batch},   {"hidden", widths()}};
  }
};

ordered_json provenance() { return {{"tool", "timepred"}, {"version", TIMEPRED_VERSION}}; }

ordered_json loss_summary(const TimePredictor& model) {
  const auto& h = model.loss_history();
  ordered_json j{{"epochs", h.size()}};
  if (!h.empty()) {
    j["initial_loss"] = h.front();
    j["final_loss"] = h.back();
  }
  return j;
}

std::string join(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

MatrixFormat format_for(const std::string& path, const std::string& requested) {
  if (requested == "binary") return MatrixFormat::Binary;
  if (requested == "csv") return MatrixFormat::Csv;
  return std::filesystem::path(path).extension() == ".csv" ? MatrixFormat::Csv : MatrixFormat::Binary;
}

// "all", "a:b" (half-open) and single indices, comma separated.
std::vector<std::size_t> parse_samples(const std::vector<std::string>& items, std::size_t rows) {
  std::vector<std::size_t> out;
  auto number = [](const std::string& s) -> std::size_t {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (s.empty() || used != s.size()) fail(ErrorKind::Config, "bad sample index '" + s + "'");
    return static_cast<std::size_t>(v);
  };
  for (const auto& item : items) {
    if (item == "all") {
      for (std::size_t t = 0; t < rows; ++t) out.push_back(t);
    } else if (const auto colon = item.find(':'); colon != std::string::npos) {
      const std::size_t lo = colon == 0 ? 0 : number(item.substr(0, colon));
      const std::size_t hi = colon + 1 == item.size() ? rows : number(item.substr(colon + 1));
      if (hi > rows) fail(ErrorKind::InvalidRange, "sample range end " + std::to_string(hi) + " exceeds T = " + std::to_string(rows));
      for (std::size_t t = lo; t < hi; ++t) out.push_back(t);
    } else {
      out.push_back(number(item));
    }
  }
  return out;
}

// ---- gen -------------------------------------------------------------------

struct GenArgs {
  std::string family;
  std::size_t length = 10000;
  std::size_t dims = 100;
  std::uint64_t seed = 0;
  std::string out;
  std::string format = "auto";
  double cp_lo = 0.25, cp_hi = 0.75;
  GeneratorParams params;
};

int cmd_gen(const GenArgs& a) {
  ProblemSpec spec;
  spec.family = parse_family(a.family);
  spec.length = a.length;
  spec.dims = a.dims;
  spec.seed = a.seed;
  spec.cp_lo = a.cp_lo;
  spec.cp_hi = a.cp_hi;
  spec.params = a.params;
  const LabeledDataset ds = generate(spec);

  const auto& g = a.params;
  ordered_json params{{"family", a.family},
                      {"T", a.length},
                      {"d", a.dims},
                      {"seed", a.seed},
                      {"cp_window", {a.cp_lo, a.cp_hi}},
                      {"mean_shift_delta", g.mean_shift_delta},
                      {"pw_sources", g.pw_sources},
                      {"pw_noise_sd", g.pw_noise_sd},
                      {"pw_max_cosine", g.pw_max_cosine},
                      {"variance_range", {g.variance_lo, g.variance_hi}},
                      {"ar_phi_max", g.ar_phi_max},
                      {"ar_min_gap", g.ar_min_gap},
                      {"cov_spectrum_range", {g.cov_spectrum_lo, g.cov_spectrum_hi}},
                      {"no_change", g.no_change}};
  const MatrixFormat fmt = format_for(a.out, a.format);
  // The binary layout has no room for metadata; the sidecar carries it for both formats.
  write_matrix(a.out, ds.series, fmt,
               {"timepred " TIMEPRED_VERSION, "params " + params.dump()});
  write_file_atomic(sidecar_path(a.out), encode_sidecar(sidecar_for(ds), ds.series.rows(), params.dump()));
  std::printf("%zu\n", ds.true_cp);
  return kOk;
}

// ---- detect ----------------------------------------------------------------

struct DetectArgs {
  std::string input;
  std::string method = "timepred";
  std::string cost = "l2";
  std::size_t k = 1;
  std::optional<std::size_t> jump;
  std::optional<std::size_t> min_size;
  std::uint64_t seed = 0;
  std::string out;
  std::string model_out;
  TrainFlags train;
};

int cmd_detect(DetectArgs a) {
  const TimeSeriesMatrix series = read_matrix(a.input);
  a.train.fit_to(series.rows());
  MethodId id = MethodId::parse(a.method + "/l2");
  id.cost = CostKind::parse(a.cost);
  id.cost.validate();

  SegmentationConfig seg = SegmentationConfig::defaults(series.rows(), a.k, id.cost);
  if (a.jump) seg.jump = *a.jump;
  if (a.min_size) seg.min_segment_length = *a.min_size;

  ordered_json result = provenance();
  ordered_json params{{"input", a.input},     {"method", a.method}, {"cost", a.cost},
                      {"k", a.k},             {"jump", seg.jump},   {"min_segment_length", seg.min_segment_length},
                      {"seed", a.seed}};
  if (id.method == Method::TimePred) params["train"] = a.train.to_json();
  result["params"] = params;

  double feature_seconds = 0.0;
  Segmentation found;
  switch (id.method) {
    case Method::Vanilla: {
      check_feasible(series.rows(), seg, 0);
      auto timed = timer("segment", [&] { return vanilla_detect(series, id.cost, seg); });
      found = timed.value;
      result["timings"] = {{"feature_seconds", 0.0}, {"segment_seconds", timed.seconds}};
      break;
    }
    case Method::WangProjection: {
      check_feasible(series.rows(), seg, 0);
      auto projection = timer("project", [&] {
        return leading_singular_vector(cusum_transform(series), a.seed);
      });
      feature_seconds = projection.seconds;
      const std::vector<double> projected = project_rows(series, projection.value);
      auto timed = timer("segment", [&] {
        return segment_dynp(TimeSeriesMatrix::column(projected), id.cost, seg);
      });
      found = timed.value;
      result["timings"] = {{"feature_seconds", feature_seconds}, {"segment_seconds", timed.seconds}};
      result["projection"] = {{"singular_value", projection.value.singular_value},
                              {"iterations", projection.value.iterations},
                              {"direction", projection.value.direction}};
      break;
    }
    case Method::TimePred: {
      check_feasible(series.rows(), seg, 0);
      const std::vector<std::size_t> widths = a.train.widths();
      auto trained = timer("train", [&] { return fit(series, a.train.config(a.seed), widths); });
      const PredictedIndexSeries y = predict(trained.value, series);
      auto timed = timer("segment", [&] { return segment_dynp(y.as_series(), id.cost, seg); });
      found = timed.value;
      result["timings"] = {{"feature_seconds", trained.seconds}, {"segment_seconds", timed.seconds}};
      result["training"] = loss_summary(trained.value);
      const auto& h = trained.value.loss_history();
      if (!h.empty()) {
        std::fprintf(stderr, "training: %zu epochs, loss %.6g -> %.6g\n", h.size(), h.front(), h.back());
      }
      if (!a.model_out.empty()) {
        trained.value.save(a.model_out);
        result["model"] = a.model_out;
      }
      break;
    }
  }

  result["breakpoints"] = found.breakpoints();
  std::printf("breakpoints: [%s]\n", join(found.breakpoints()).c_str());
  std::printf("timings: feature %.6f s, segment %.6f s\n", result["timings"]["feature_seconds"].get<double>(),
              result["timings"]["segment_seconds"].get<double>());
  if (!a.out.empty()) write_file_atomic(a.out, result.dump(2) + "\n");
  return kOk;
}

// ---- fit -------------------------------------------------------------------

struct FitArgs {
  std::string input;
  std::string out;
  std::uint64_t seed = 0;
  std::string predictions;
  TrainFlags train;
};

int cmd_fit(FitArgs a) {
  const TimeSeriesMatrix series = read_matrix(a.input);
  a.train.fit_to(series.rows());
  const std::vector<std::size_t> widths = a.train.widths();
  auto trained = timer("train", [&] { return fit(series, a.train.config(a.seed), widths); });
  const TimePredictor& model = trained.value;
  model.save(a.out);

  ordered_json meta = provenance();
  meta["params"] = {{"input", a.input}, {"seed", a.seed}, {"train", a.train.to_json()}};
  meta["layer_sizes"] = model.layer_sizes();
  meta["training"] = loss_summary(model);
  meta["loss_history"] = model.loss_history();
  meta["train_seconds"] = trained.seconds;
  write_file_atomic(a.out + ".json", meta.dump(2) + "\n");

  if (!a.predictions.empty()) {
    write_matrix(a.predictions, TimeSeriesMatrix::column(model.fitted_values()), MatrixFormat::Csv,
                 {"timepred " TIMEPRED_VERSION, "params " + meta["params"].dump()});
  }
  const auto& h = model.loss_history();
  std::printf("trained %zu parameters, %zu epochs, loss %.6g -> %.6g, seed %llu\n", model.parameter_count(),
              h.size(), h.empty() ? 0.0 : h.front(), h.empty() ? 0.0 : h.back(),
              static_cast<unsigned long long>(a.seed));
  return kOk;
}

// ---- explain ---------------------------------------------------------------

struct ExplainArgs {
  std::string input;
  std::string model;
  std::vector<std::string> samples{"all"};
  double reference = kDefaultReference;
  double epsilon = kDefaultLrpEpsilon;
  std::string out;
};

int cmd_explain(const ExplainArgs& a) {
  if (!std::filesystem::exists(a.model)) fail(ErrorKind::Io, "model file '" + a.model + "' not found");
  const TimePredictor model = TimePredictor::load(a.model);
  const TimeSeriesMatrix series = read_matrix(a.input);
  const std::vector<std::size_t> rows = parse_samples(a.samples, series.rows());
  const std::vector<AttributionMap> maps = explain_rows(model, series, rows, a.reference, a.epsilon);

  ordered_json params{{"input", a.input}, {"model", a.model}, {"samples", a.samples},
                      {"reference", a.reference}, {"epsilon", a.epsilon}};
  std::ostringstream csv;
  csv << "# timepred " TIMEPRED_VERSION "\n# params " << params.dump() << "\n";
  csv << "sample_index";
  for (std::size_t j = 0; j < series.cols(); ++j) csv << ",dim_" << j;
  csv << ",explained_value,output,bias_relevance\n";
  char buf[32];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& m = maps[i];
    csv << rows[i];
    for (double r : m.relevance) csv << ',' << num(r);
    csv << ',' << num(m.explained_value) << ',' << num(m.output) << ',' << num(m.bias_relevance) << "\n";
  }
  write_file_atomic(a.out, csv.str());

  const std::vector<double> mean_abs = mean_abs_relevance(maps);
  std::size_t top = 0;
  for (std::size_t j = 1; j < mean_abs.size(); ++j) {
    if (mean_abs[j] > mean_abs[top]) top = j;
  }
  std::printf("explained %zu samples; top dimension %zu (mean |relevance| %.6g)\n", rows.size(), top,
              mean_abs.empty() ? 0.0 : mean_abs[top]);
  return kOk;
}

// ---- bench -----------------------------------------------------------------

struct BenchArgs {
  std::string config_file;
  bool paper_scale = false;
  std::vector<std::string> families;
  std::vector<std::string> methods;
  std::optional<std::size_t> reps, length, dims, tolerance, jobs;
  std::optional<std::uint64_t> seed;
  std::string out = "timepred_bench";
  bool omit_timings = false;
  bool methods_given = false;
};

int cmd_bench(const BenchArgs& a) {
  BenchmarkConfig c = a.paper_scale ? BenchmarkConfig::paper_scale() : BenchmarkConfig::desk_scale();
  c.jobs = std::max(1u, std::thread::hardware_concurrency());
  if (!a.config_file.empty()) c = config_from_json(read_file(a.config_file), c);
  if (!a.families.empty()) {
    c.families.clear();
    for (const auto& f : a.families) c.families.push_back(parse_family(f));
  }
  if (a.methods_given) {
    c.methods.clear();
    for (const auto& m : a.methods) {
      if (!m.empty()) c.methods.push_back(MethodId::parse(m));
    }
    if (c.methods.empty()) fail(ErrorKind::Config, "method list is empty");
  }
  if (a.reps) c.n_reps = *a.reps;
  if (a.length) c.length = *a.length;
  if (a.dims) c.dims = *a.dims;
  if (a.tolerance) c.tolerance = *a.tolerance;
  if (a.jobs) c.jobs = *a.jobs;
  if (a.seed) c.master_seed = *a.seed;
  c.validate();

  std::fprintf(stderr, "bench: %zu families x %zu methods x %zu reps, T=%zu d=%zu, seed %llu, %zu jobs\n",
               c.families.size(), c.methods.size(), c.n_reps, c.length, c.dims,
               static_cast<unsigned long long>(c.master_seed), c.jobs);
  const BenchmarkReport report = run_benchmark(c);
  write_file_atomic(a.out + ".json", report_to_json(report, !a.omit_timings));
  write_file_atomic(a.out + ".csv", report_to_csv(report));

  for (const auto& cell : report.cells) {
    std::printf("%-15s %-14s precision %.3f  n=%zu failed=%zu  mean runtime %.4f s\n", to_string(cell.family).c_str(),
                cell.method.c_str(), cell.precision, cell.n_datasets, cell.n_failed, cell.mean_runtime_seconds);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"timepred: change-point detection by time-index prediction"};
  app.set_version_flag("--version", "timepred " TIMEPRED_VERSION);
  app.require_subcommand(1);
  int status = kOk;

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "generate a labelled synthetic dataset");
  g->add_option("family", gen.family, "mean_shift, pw_linear, variance_shift, ar_shift or cov_shift")->required();
  g->add_option("-T,--length", gen.length, "time steps")->capture_default_str();
  g->add_option("-d,--dims", gen.dims, "dimensions")->capture_default_str();
  g->add_option("--seed", gen.seed, "generator seed")->capture_default_str();
  g->add_option("-o,--out", gen.out, "output matrix path (.csv selects CSV)")->required();
  g->add_option("--format", gen.format, "auto, binary or csv")
      ->check(CLI::IsMember({"auto", "binary", "csv"}))
      ->capture_default_str();
  g->add_option("--cp-lo", gen.cp_lo, "earliest change point as a fraction of T")->capture_default_str();
  g->add_option("--cp-hi", gen.cp_hi, "latest change point as a fraction of T")->capture_default_str();
  g->add_option("--delta", gen.params.mean_shift_delta, "mean-shift magnitude")->capture_default_str();
  g->add_flag("--no-change", gen.params.no_change, "control dataset with identical regimes");
  g->callback([&] { status = cmd_gen(gen); });

  DetectArgs det;
  auto* d = app.add_subcommand("detect", "segment a matrix file");
  d->add_option("input", det.input, "matrix file")->required();
  d->add_option("--method", det.method, "vanilla, wang or timepred")
      ->check(CLI::IsMember({"vanilla", "wang", "timepred"}))
      ->capture_default_str();
  d->add_option("--cost", det.cost, "l2, ar[:order] or rbf[:bandwidth]")->capture_default_str();
  d->add_option("-k", det.k, "number of change points")->capture_default_str();
  d->add_option("--jump", det.jump, "breakpoint stride (default 1 up to T=2000, else 5)");
  d->add_option("--min-size", det.min_size, "minimum segment length");
  d->add_option("--seed", det.seed, "training / projection seed")->capture_default_str();
  d->add_option("-o,--out", det.out, "JSON result file");
  d->add_option("--model-out", det.model_out, "save the trained predictor (timepred only)");
  det.train.add_to(*d);
  d->callback([&] { status = cmd_detect(det); });

  FitArgs fa;
  auto* f = app.add_subcommand("fit", "train a time-index predictor");
  f->add_option("input", fa.input, "matrix file")->required();
  f->add_option("-o,--out", fa.out, "model file")->required();
  f->add_option("--seed", fa.seed, "training seed")->capture_default_str();
  f->add_option("--predictions", fa.predictions, "write fitted values as CSV");
  fa.train.add_to(*f);
  f->callback([&] { status = cmd_fit(fa); });

  ExplainArgs ex;
  auto* e = app.add_subcommand("explain", "per-dimension relevance of predictions");
  e->add_option("input", ex.input, "matrix file")->required();
  e->add_option("-m,--model", ex.model, "model file")->required();
  e->add_option("-s,--samples", ex.samples, "row indices: 'all', 'a:b', or single indices, comma separated")
      ->delimiter(',')
      ->capture_default_str();
  e->add_option("--reference", ex.reference, "baseline output to explain against")->capture_default_str();
  e->add_option("--epsilon", ex.epsilon, "LRP stabiliser")->capture_default_str();
  e->add_option("-o,--out", ex.out, "relevance CSV")->required();
  e->callback([&] { status = cmd_explain(ex); });

  BenchArgs be;
  auto* b = app.add_subcommand("bench", "run the method x cost benchmark grid");
  b->add_option("--config", be.config_file, "JSON parameter block (same keys as report params)");
  b->add_flag("--paper-scale", be.paper_scale, "T=10000, d=100, 100 reps, tolerance 100");
  b->add_option("--families", be.families, "families, comma separated")->delimiter(',');
  auto* methods_opt = b->add_option("--methods", be.methods, "method ids like timepred/l2, comma separated")
                          ->delimiter(',')
                          ->expected(0, -1);
  b->add_option("--reps", be.reps, "replications per family");
  b->add_option("-T,--length", be.length, "time steps");
  b->add_option("-d,--dims", be.dims, "dimensions");
  b->add_option("--tolerance", be.tolerance, "detection tolerance in steps");
  b->add_option("--seed", be.seed, "master seed");
  b->add_option("-j,--jobs", be.jobs, "worker threads (default: logical cores)");
  b->add_option("-o,--out", be.out, "output prefix for .json and .csv")->capture_default_str();
  b->add_flag("--omit-timings", be.omit_timings, "leave timing fields out of the JSON report");
  b->callback([&] {
    be.methods_given = methods_opt->count() > 0;
    status = cmd_bench(be);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  } catch (const Error& e) {
    std::fprintf(stderr, "timepred: %s error: %s\n", to_string(e.kind()), e.what());
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "timepred: %s\n", e.what());
    return kFormat;
  }
  return status;
}
