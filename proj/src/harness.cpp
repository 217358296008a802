#include "timepred/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <thread>
#include <tuple>

#include <json.hpp>

#include "timepred/baselines.hpp"
#include "timepred/error.hpp"
#include "timepred/rng.hpp"

namespace timepred {
namespace {

using json = nlohmann::ordered_json;

const char* method_prefix(Method m) {
  switch (m) {
    case Method::Vanilla: return "vanilla";
    case Method::WangProjection: return "wang";
    case Method::TimePred: return "timepred";
  }
  return "unknown";
}

SegmentationConfig seg_config(const BenchmarkConfig& config, const CostKind& cost) {
  SegmentationConfig c = SegmentationConfig::defaults(config.length, 1, cost);
  if (config.jump) c.jump = *config.jump;
  if (config.min_size) c.min_segment_length = std::max(*config.min_size, c.min_segment_length);
  return c;
}

std::string describe_error(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    return std::string(to_string(err->kind())) + ": " + err->what();
  }
  return e.what();
}

// Runs one segmentation and fills the timing and detection fields.
void segment_into(MethodResult& r, const TimeSeriesMatrix& series, const CostKind& cost,
                  const SegmentationConfig& sc, std::size_t truth, std::size_t tol) {
  try {
    auto seg = timer("segment", [&] { return segment_dynp(series, cost, sc); });
    r.breakpoints = seg.value.breakpoints();
    r.segment_seconds = seg.seconds;
    r.precision = precision_at_tolerance(r.breakpoints, {truth}, tol);
  } catch (const std::exception& e) {
    r.error = describe_error(e);
  }
  r.total_seconds = r.feature_seconds + r.segment_seconds;
}

}  // namespace

std::string MethodId::id() const { return std::string(method_prefix(method)) + "/" + cost.name(); }

MethodId MethodId::parse(const std::string& id) {
  const auto slash = id.find('/');
  if (slash == std::string::npos) fail(ErrorKind::Config, "method id '" + id + "' must look like 'timepred/l2'");
  const std::string prefix = id.substr(0, slash);
  MethodId m;
  if (prefix == "vanilla") {
    m.method = Method::Vanilla;
  } else if (prefix == "wang") {
    m.method = Method::WangProjection;
  } else if (prefix == "timepred") {
    m.method = Method::TimePred;
  } else {
    fail(ErrorKind::Config, "unknown method '" + prefix + "' (expected vanilla, wang or timepred)");
  }
  m.cost = CostKind::parse(id.substr(slash + 1));
  return m;
}

std::vector<MethodId> MethodId::all() {
  std::vector<MethodId> out;
  for (Method m : {Method::Vanilla, Method::WangProjection, Method::TimePred}) {
    for (const CostKind& c : {CostKind::l2(), CostKind::ar(), CostKind::rbf()}) out.push_back({m, c});
  }
  return out;
}

double precision_at_tolerance(const std::vector<std::size_t>& predicted, const std::vector<std::size_t>& truth,
                              std::size_t tol) {
  if (predicted.empty()) return truth.empty() ? 1.0 : 0.0;
  if (truth.empty()) return 0.0;

  struct Pair {
    std::size_t dist, p, t;
  };
  std::vector<Pair> pairs;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    for (std::size_t k = 0; k < truth.size(); ++k) {
      const std::size_t dist = predicted[i] > truth[k] ? predicted[i] - truth[k] : truth[k] - predicted[i];
      if (dist <= tol) pairs.push_back({dist, i, k});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.dist != b.dist) return a.dist < b.dist;
    if (a.p != b.p) return a.p < b.p;
    return a.t < b.t;
  });
  std::vector<bool> used_p(predicted.size()), used_t(truth.size());
  std::size_t matched = 0;
  for (const Pair& pr : pairs) {
    if (used_p[pr.p] || used_t[pr.t]) continue;
    used_p[pr.p] = used_t[pr.t] = true;
    ++matched;
  }
  return static_cast<double>(matched) / static_cast<double>(predicted.size());
}

BenchmarkConfig BenchmarkConfig::desk_scale() { return BenchmarkConfig{}; }

BenchmarkConfig BenchmarkConfig::paper_scale() {
  BenchmarkConfig c;
  c.length = 10000;
  c.dims = 100;
  c.n_reps = 100;
  c.tolerance = 100;
  return c;
}

void BenchmarkConfig::validate() const {
  if (n_reps < 1) fail(ErrorKind::Config, "need at least one replication");
  if (families.empty()) fail(ErrorKind::Config, "family list is empty");
  if (methods.empty()) fail(ErrorKind::Config, "method list is empty");
  if (jobs < 1) fail(ErrorKind::Config, "jobs must be >= 1");
  ProblemSpec probe{families.front(), length, dims, 0, cp_lo, cp_hi, generator};
  probe.validate();
  const bool trains = std::any_of(methods.begin(), methods.end(),
                                  [](const MethodId& m) { return m.method == Method::TimePred; });
  if (trains) train.validate(length);
}

const CellSummary& BenchmarkReport::cell(Family family, const std::string& method) const {
  for (const auto& c : cells) {
    if (c.family == family && c.method == method) return c;
  }
  fail(ErrorKind::Config, "report has no cell " + to_string(family) + " x " + method);
}

std::uint64_t dataset_seed(std::uint64_t master_seed, Family family, std::size_t rep) {
  return derive_seed(master_seed, {static_cast<std::uint64_t>(family) + 1, rep});
}

DatasetRecord run_dataset(const BenchmarkConfig& config, Family family, std::size_t rep) {
  DatasetRecord rec;
  rec.family = family;
  rec.rep = rep;
  rec.seed = dataset_seed(config.master_seed, family, rep);
  rec.results.resize(config.methods.size());
  for (std::size_t m = 0; m < config.methods.size(); ++m) rec.results[m].method = config.methods[m].id();

  LabeledDataset ds;
  try {
    ds = generate(ProblemSpec{family, config.length, config.dims, rec.seed, config.cp_lo, config.cp_hi,
                              config.generator});
  } catch (const std::exception& e) {
    for (auto& r : rec.results) r.error = describe_error(e);
    return rec;
  }
  rec.true_cp = ds.true_cp;
  rec.degenerate = ds.degenerate;
  const std::size_t tol = config.tolerance;

  auto wants = [&](Method m) {
    return std::any_of(config.methods.begin(), config.methods.end(),
                       [m](const MethodId& id) { return id.method == m; });
  };

  // Shared per-dataset features: the predicted index sequence and the
  // CUSUM projection are computed once and reused for every cost.
  std::optional<TimeSeriesMatrix> predicted, projected;
  double predicted_seconds = 0.0, projected_seconds = 0.0;
  std::string predicted_error, projected_error;

  if (wants(Method::TimePred)) {
    try {
      TrainConfig tc = config.train;
      tc.seed = derive_seed(rec.seed, {0x747261696eu});
      auto run = timer("fit+predict", [&] {
        const TimePredictor model = fit(ds.series, tc, config.hidden);
        return predict(model, ds.series).as_series();
      });
      predicted = std::move(run.value);
      predicted_seconds = run.seconds;
    } catch (const std::exception& e) {
      predicted_error = describe_error(e);
    }
  }
  if (wants(Method::WangProjection)) {
    try {
      auto run = timer("project", [&] {
        const ProjectionVector v = leading_singular_vector(cusum_transform(ds.series),
                                                           derive_seed(rec.seed, {0x70726f6au}));
        return TimeSeriesMatrix::column(project_rows(ds.series, v));
      });
      projected = std::move(run.value);
      projected_seconds = run.seconds;
    } catch (const std::exception& e) {
      projected_error = describe_error(e);
    }
  }

  for (std::size_t m = 0; m < config.methods.size(); ++m) {
    const MethodId& id = config.methods[m];
    MethodResult& r = rec.results[m];
    const SegmentationConfig sc = seg_config(config, id.cost);
    switch (id.method) {
      case Method::Vanilla:
        segment_into(r, ds.series, id.cost, sc, ds.true_cp, tol);
        break;
      case Method::WangProjection:
        r.feature_seconds = projected_seconds;
        if (!projected) {
          r.error = projected_error;
        } else {
          segment_into(r, *projected, id.cost, sc, ds.true_cp, tol);
        }
        break;
      case Method::TimePred:
        r.feature_seconds = predicted_seconds;
        if (!predicted) {
          r.error = predicted_error;
        } else {
          segment_into(r, *predicted, id.cost, sc, ds.true_cp, tol);
        }
        break;
    }
    r.total_seconds = r.feature_seconds + r.segment_seconds;
  }
  return rec;
}

std::vector<CellSummary> summarize(const BenchmarkConfig& config, const std::vector<DatasetRecord>& datasets) {
  std::vector<CellSummary> cells;
  for (Family f : config.families) {
    for (std::size_t m = 0; m < config.methods.size(); ++m) {
      CellSummary c;
      c.family = f;
      c.method = config.methods[m].id();
      std::size_t timed = 0;
      for (const auto& rec : datasets) {
        if (rec.family != f) continue;
        const MethodResult& r = rec.results[m];
        if (r.failed()) {
          ++c.n_failed;
          continue;
        }
        ++timed;
        c.mean_runtime_seconds += r.total_seconds;
        c.mean_feature_seconds += r.feature_seconds;
        c.mean_segment_seconds += r.segment_seconds;
        if (rec.degenerate) continue;
        ++c.n_datasets;
        c.precision += r.precision;
      }
      c.total_runtime_seconds = c.mean_runtime_seconds;
      if (c.n_datasets > 0) c.precision /= static_cast<double>(c.n_datasets);
      if (timed > 0) {
        c.mean_runtime_seconds /= static_cast<double>(timed);
        c.mean_feature_seconds /= static_cast<double>(timed);
        c.mean_segment_seconds /= static_cast<double>(timed);
      }
      cells.push_back(c);
    }
  }
  return cells;
}

BenchmarkReport run_benchmark(const BenchmarkConfig& config) {
  config.validate();
  BenchmarkReport report;
  report.config = config;

  std::vector<std::pair<Family, std::size_t>> tasks;
  for (Family f : config.families) {
    for (std::size_t rep = 0; rep < config.n_reps; ++rep) tasks.emplace_back(f, rep);
  }
  report.datasets.resize(tasks.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      report.datasets[i] = run_dataset(config, tasks[i].first, tasks[i].second);
    }
  };
  const std::size_t n_workers = std::min(config.jobs, tasks.size());
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  report.cells = summarize(config, report.datasets);
  return report;
}

std::string config_to_json(const BenchmarkConfig& config) {
  json p;
  std::vector<std::string> families, methods;
  for (Family f : config.families) families.push_back(to_string(f));
  for (const auto& m : config.methods) methods.push_back(m.id());
  p["families"] = families;
  p["methods"] = methods;
  p["n_reps"] = config.n_reps;
  p["T"] = config.length;
  p["d"] = config.dims;
  p["tolerance"] = config.tolerance;
  p["master_seed"] = config.master_seed;
  p["cp_window"] = {config.cp_lo, config.cp_hi};
  const auto& g = config.generator;
  p["generator"] = {{"mean_shift_delta", g.mean_shift_delta},
                    {"pw_sources", g.pw_sources},
                    {"pw_noise_sd", g.pw_noise_sd},
                    {"pw_max_cosine", g.pw_max_cosine},
                    {"variance_range", {g.variance_lo, g.variance_hi}},
                    {"ar_phi_max", g.ar_phi_max},
                    {"ar_min_gap", g.ar_min_gap},
                    {"cov_spectrum_range", {g.cov_spectrum_lo, g.cov_spectrum_hi}},
                    {"no_change", g.no_change}};
  const auto& t = config.train;
  p["train"] = {{"l1_weight", t.l1_weight},         {"l2_weight", t.l2_weight},
                {"learning_rate", t.learning_rate}, {"momentum", t.momentum},
                {"epochs", t.epochs},               {"batch_size", t.batch_size},
                {"hidden", config.hidden}};
  p["jump"] = config.jump ? json(*config.jump) : json("default");
  p["min_segment_length"] = config.min_size ? json(*config.min_size) : json("default");
  return p.dump();
}

namespace {

template <class T>
T field(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    fail(ErrorKind::Config, std::string("bad value for '") + key + "'");
  }
}

std::pair<double, double> range_field(const json& j, const char* key) {
  const auto v = field<std::vector<double>>(j, key);
  if (v.size() != 2) fail(ErrorKind::Config, std::string("'") + key + "' needs two numbers");
  return {v[0], v[1]};
}

std::optional<std::size_t> default_or_count(const json& j, const char* key) {
  if (j.at(key).is_string() && j.at(key).get<std::string>() == "default") return std::nullopt;
  return field<std::size_t>(j, key);
}

}  // namespace

BenchmarkConfig config_from_json(const std::string& text, BenchmarkConfig c) {
  json p;
  try {
    p = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::Format, std::string("config is not valid JSON: ") + e.what());
  }
  if (!p.is_object()) fail(ErrorKind::Format, "config must be a JSON object");

  for (const auto& [key, value] : p.items()) {
    if (key == "families") {
      c.families.clear();
      for (const auto& f : field<std::vector<std::string>>(p, "families")) c.families.push_back(parse_family(f));
    } else if (key == "methods") {
      c.methods.clear();
      for (const auto& m : field<std::vector<std::string>>(p, "methods")) c.methods.push_back(MethodId::parse(m));
    } else if (key == "n_reps") {
      c.n_reps = field<std::size_t>(p, "n_reps");
    } else if (key == "T") {
      c.length = field<std::size_t>(p, "T");
    } else if (key == "d") {
      c.dims = field<std::size_t>(p, "d");
    } else if (key == "tolerance") {
      c.tolerance = field<std::size_t>(p, "tolerance");
    } else if (key == "master_seed") {
      c.master_seed = field<std::uint64_t>(p, "master_seed");
    } else if (key == "jobs") {
      c.jobs = field<std::size_t>(p, "jobs");
    } else if (key == "cp_window") {
      std::tie(c.cp_lo, c.cp_hi) = range_field(p, "cp_window");
    } else if (key == "jump") {
      c.jump = default_or_count(p, "jump");
    } else if (key == "min_segment_length") {
      c.min_size = default_or_count(p, "min_segment_length");
    } else if (key == "generator") {
      auto& g = c.generator;
      for (const auto& [gk, gv] : value.items()) {
        if (gk == "mean_shift_delta") g.mean_shift_delta = field<double>(value, "mean_shift_delta");
        else if (gk == "pw_sources") g.pw_sources = field<std::size_t>(value, "pw_sources");
        else if (gk == "pw_noise_sd") g.pw_noise_sd = field<double>(value, "pw_noise_sd");
        else if (gk == "pw_max_cosine") g.pw_max_cosine = field<double>(value, "pw_max_cosine");
        else if (gk == "variance_range") std::tie(g.variance_lo, g.variance_hi) = range_field(value, "variance_range");
        else if (gk == "ar_phi_max") g.ar_phi_max = field<double>(value, "ar_phi_max");
        else if (gk == "ar_min_gap") g.ar_min_gap = field<double>(value, "ar_min_gap");
        else if (gk == "cov_spectrum_range") {
          std::tie(g.cov_spectrum_lo, g.cov_spectrum_hi) = range_field(value, "cov_spectrum_range");
        } else if (gk == "no_change") g.no_change = field<bool>(value, "no_change");
        else fail(ErrorKind::Config, "unknown generator key '" + gk + "'");
      }
    } else if (key == "train") {
      auto& t = c.train;
      for (const auto& [tk, tv] : value.items()) {
        if (tk == "l1_weight") t.l1_weight = field<double>(value, "l1_weight");
        else if (tk == "l2_weight") t.l2_weight = field<double>(value, "l2_weight");
        else if (tk == "learning_rate") t.learning_rate = field<double>(value, "learning_rate");
        else if (tk == "momentum") t.momentum = field<double>(value, "momentum");
        else if (tk == "epochs") t.epochs = field<std::size_t>(value, "epochs");
        else if (tk == "batch_size") t.batch_size = field<std::size_t>(value, "batch_size");
        else if (tk == "hidden") c.hidden = field<std::vector<std::size_t>>(value, "hidden");
        else fail(ErrorKind::Config, "unknown train key '" + tk + "'");
      }
    } else {
      fail(ErrorKind::Config, "unknown config key '" + key + "'");
    }
  }
  return c;
}

std::string report_to_json(const BenchmarkReport& report, bool include_timings) {
  json j;
  j["tool"] = "timepred";
  j["version"] = TIMEPRED_VERSION;
  j["master_seed"] = report.config.master_seed;
  j["params"] = json::parse(config_to_json(report.config));
  if (include_timings) j["jobs"] = report.config.jobs;

  json cells = json::array();
  for (const auto& c : report.cells) {
    json cj{{"family", to_string(c.family)},
            {"method", c.method},
            {"precision", c.precision},
            {"n_datasets", c.n_datasets},
            {"n_failed", c.n_failed},
            {"tolerance", report.config.tolerance}};
    if (include_timings) {
      cj["mean_runtime_seconds"] = c.mean_runtime_seconds;
      cj["mean_feature_seconds"] = c.mean_feature_seconds;
      cj["mean_segment_seconds"] = c.mean_segment_seconds;
      cj["total_runtime_seconds"] = c.total_runtime_seconds;
    }
    cells.push_back(std::move(cj));
  }
  j["cells"] = std::move(cells);

  json datasets = json::array();
  for (const auto& rec : report.datasets) {
    json dj{{"family", to_string(rec.family)},
            {"rep", rec.rep},
            {"seed", rec.seed},
            {"true_cp", rec.true_cp},
            {"degenerate", rec.degenerate}};
    json results = json::array();
    for (const auto& r : rec.results) {
      json rj{{"method", r.method}, {"breakpoints", r.breakpoints}, {"precision", r.precision}};
      if (include_timings) {
        rj["feature_seconds"] = r.feature_seconds;
        rj["segment_seconds"] = r.segment_seconds;
        rj["total_seconds"] = r.total_seconds;
      }
      if (r.failed()) rj["error"] = r.error;
      results.push_back(std::move(rj));
    }
    dj["results"] = std::move(results);
    datasets.push_back(std::move(dj));
  }
  j["datasets"] = std::move(datasets);
  return j.dump(2) + "\n";
}

std::string report_to_csv(const BenchmarkReport& report) {
  std::string out = "# timepred " TIMEPRED_VERSION "\n";
  out += "# master_seed " + std::to_string(report.config.master_seed) + "\n";
  out += "# params " + config_to_json(report.config) + "\n";
  out += "family,method,cost,precision,n_datasets,n_failed,tolerance,mean_runtime_seconds,"
         "mean_feature_seconds,mean_segment_seconds\n";
  char buf[256];
  for (const auto& c : report.cells) {
    const auto slash = c.method.find('/');
    std::snprintf(buf, sizeof buf, "%s,%s,%s,%.6f,%zu,%zu,%zu,%.6f,%.6f,%.6f\n", to_string(c.family).c_str(),
                  c.method.substr(0, slash).c_str(), c.method.substr(slash + 1).c_str(), c.precision,
                  c.n_datasets, c.n_failed, report.config.tolerance, c.mean_runtime_seconds,
                  c.mean_feature_seconds, c.mean_segment_seconds);
    out += buf;
  }
  return out;
}

}  // namespace timepred
