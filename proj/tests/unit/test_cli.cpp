#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "timepred/attribution.hpp"
#include "timepred/matrix_io.hpp"
#include "timepred/model.hpp"

using namespace timepred;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(TIMEPRED_CLI_PATH) + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe) != nullptr) r.out += buf;
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

struct Workspace {
  fs::path dir;
  Workspace() : dir(fs::temp_directory_path() / ("timepred_cli_" + std::to_string(::getpid()))) {
    fs::create_directories(dir);
  }
  ~Workspace() { fs::remove_all(dir); }
  std::string operator/(const std::string& name) const { return (dir / name).string(); }
};

std::vector<std::vector<double>> read_relevance_csv(const std::string& path, std::size_t d) {
  std::ifstream in(path);
  std::string line;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("sample_index", 0) == 0) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> v;
    while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
    REQUIRE(v.size() == d + 4);
    rows.push_back(v);
  }
  return rows;
}

}  // namespace

TEST_CASE("gen writes a deterministic binary file and a label sidecar") {
  Workspace ws;
  const auto r = run("gen mean_shift -T 1000 -d 10 --seed 7 -o " + (ws / "a.bin"));
  REQUIRE(r.code == 0);
  CHECK(fs::file_size(ws / "a.bin") == 12 + 8 * 10000);
  const auto label = decode_sidecar(read_file(sidecar_path(ws / "a.bin")), 1000);
  CHECK(std::to_string(label.true_cps.at(0)) + "\n" == r.out);
  CHECK(read_file(sidecar_path(ws / "a.bin")).find("\"version\"") != std::string::npos);

  REQUIRE(run("gen mean_shift -T 1000 -d 10 --seed 7 -o " + (ws / "b.bin")).code == 0);
  CHECK(read_file(ws / "a.bin") == read_file(ws / "b.bin"));
  REQUIRE(run("gen mean_shift -T 1000 -d 10 --seed 7 -o " + (ws / "a.csv")).code == 0);
  CHECK(read_matrix(ws / "a.csv") == read_matrix(ws / "a.bin"));
  CHECK(read_file(ws / "a.csv").find("# timepred") == 0);
}

TEST_CASE("gen rejects bad input") {
  Workspace ws;
  CHECK(run("gen sine -o " + (ws / "x.bin")).code == 1);
  CHECK(run("gen mean_shift -o /nonexistent/dir/x.bin").code == 2);
  CHECK(run("gen mean_shift -T 50 -o " + (ws / "x.bin")).code == 1);
  CHECK(run("frobnicate").code == 1);
  CHECK(run("gen mean_shift --bogus -o " + (ws / "x.bin")).code == 1);
}

TEST_CASE("detect finds the generated change point") {
  Workspace ws;
  REQUIRE(run("gen mean_shift -T 1000 -d 10 --seed 3 -o " + (ws / "a.bin")).code == 0);
  const auto truth = decode_sidecar(read_file(sidecar_path(ws / "a.bin")), 1000).true_cps.at(0);
  for (const std::string method : {"timepred", "vanilla", "wang"}) {
    CAPTURE(method);
    const auto r = run("detect " + (ws / "a.bin") + " --method " + method + " --cost l2 -k 1 -o " + (ws / "r.json"));
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(read_file(ws / "r.json"));
    const auto bkps = j.at("breakpoints").get<std::vector<std::size_t>>();
    REQUIRE(bkps.size() == 1);
    CHECK(std::abs(static_cast<long>(bkps[0]) - static_cast<long>(truth)) <= 10);
    CHECK(j.at("version").get<std::string>() == TIMEPRED_VERSION);
    CHECK(j.at("params").at("method") == method);
    CHECK(j.at("timings").contains("segment_seconds"));
    if (method == "timepred") CHECK(j.at("training").at("epochs") == TrainConfig{}.epochs);
    CHECK(r.out.find("breakpoints: [") == 0);
  }
}

TEST_CASE("detect exit codes") {
  Workspace ws;
  REQUIRE(run("gen cov_shift -T 200 -d 4 --seed 1 -o " + (ws / "a.bin")).code == 0);
  const auto zero = run("detect " + (ws / "a.bin") + " -k 0 --method vanilla");
  CHECK(zero.code == 0);
  CHECK(zero.out.find("breakpoints: []") == 0);
  CHECK(run("detect " + (ws / "a.bin") + " -k 150 --method vanilla").code == 3);
  CHECK(run("detect " + (ws / "a.bin") + " --cost ar:0").code == 1);
  CHECK(run("detect " + (ws / "a.bin") + " --lr 1e12 --epochs 3").code == 4);

  const auto bytes = read_file(ws / "a.bin");
  {
    std::ofstream(ws / "t.bin", std::ios::binary) << bytes.substr(0, bytes.size() / 2);
  }
  CHECK(run("detect " + (ws / "t.bin") + " -o " + (ws / "t.json")).code == 2);
  CHECK_FALSE(fs::exists(ws / "t.json"));
  CHECK_FALSE(fs::exists(ws / "t.json.partial"));
  CHECK(run("detect " + (ws / "missing.bin")).code == 2);
}

TEST_CASE("fit and explain: linear model sanity case") {
  Workspace ws;
  REQUIRE(run("gen mean_shift -T 400 -d 5 --seed 2 -o " + (ws / "a.bin")).code == 0);
  REQUIRE(run("fit " + (ws / "a.bin") + " --linear-head -o " + (ws / "m.tpm")).code == 0);
  CHECK(read_file(ws / "m.tpm.json").find("\"version\"") != std::string::npos);
  const auto model = TimePredictor::load(ws / "m.tpm");
  REQUIRE(model.layer_sizes() == std::vector<std::size_t>{5, 1});
  const double bias = model.layers()[0].biases[0];
  char ref[64];
  std::snprintf(ref, sizeof ref, "%.17g", bias);
  REQUIRE(run("explain " + (ws / "a.bin") + " -m " + (ws / "m.tpm") + " -s 0:10 --epsilon 0 --reference " + ref +
              " -o " + (ws / "e.csv"))
              .code == 0);
  const auto x = read_matrix(ws / "a.bin");
  const auto rows = read_relevance_csv(ws / "e.csv", 5);
  REQUIRE(rows.size() == 10);
  const auto& st = model.standardizer();
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(rows[i][0] == static_cast<double>(i));
    for (std::size_t j = 0; j < 5; ++j) {
      const double want = model.layers()[0].w(0, j) * (x(i, j) - st.mean[j]) / st.scale[j];
      CHECK(rows[i][1 + j] == doctest::Approx(want).epsilon(1e-14));
    }
  }
}

TEST_CASE("explain attributes a mean shift to the shifted dimension") {
  Workspace ws;
  REQUIRE(run("gen mean_shift -T 1000 -d 10 --seed 5 -o " + (ws / "a.bin")).code == 0);
  const auto label = decode_sidecar(read_file(sidecar_path(ws / "a.bin")), 1000);
  REQUIRE(run("detect " + (ws / "a.bin") + " --model-out " + (ws / "m.tpm") + " -o " + (ws / "r.json")).code == 0);
  const auto bkp = nlohmann::json::parse(read_file(ws / "r.json")).at("breakpoints").at(0).get<std::size_t>();
  REQUIRE(run("explain " + (ws / "a.bin") + " -m " + (ws / "m.tpm") + " -s " + std::to_string(bkp) + ": -o " +
              (ws / "e.csv"))
              .code == 0);
  const auto rows = read_relevance_csv(ws / "e.csv", 10);
  CHECK(rows.size() == 1000 - bkp);
  std::vector<double> mean_abs(10, 0.0);
  for (const auto& r : rows) {
    for (std::size_t j = 0; j < 10; ++j) mean_abs[j] += std::abs(r[1 + j]);
  }
  const auto top = std::max_element(mean_abs.begin(), mean_abs.end()) - mean_abs.begin();
  CHECK(static_cast<std::size_t>(top) == label.affected_dims.at(0));
}

TEST_CASE("explain errors") {
  Workspace ws;
  REQUIRE(run("gen mean_shift -T 200 -d 3 --seed 1 -o " + (ws / "a.bin")).code == 0);
  REQUIRE(run("gen mean_shift -T 200 -d 4 --seed 1 -o " + (ws / "b.bin")).code == 0);
  REQUIRE(run("fit " + (ws / "a.bin") + " -o " + (ws / "m.tpm") + " --batch 50").code == 0);
  CHECK(run("explain " + (ws / "a.bin") + " -m " + (ws / "nope.tpm") + " -o " + (ws / "e.csv")).code == 2);
  CHECK(run("explain " + (ws / "a.bin") + " -m " + (ws / "m.tpm") + " -s 200 -o " + (ws / "e.csv")).code == 1);
  CHECK(run("explain " + (ws / "b.bin") + " -m " + (ws / "m.tpm") + " -o " + (ws / "e.csv")).code == 1);
  CHECK_FALSE(fs::exists(ws / "e.csv"));
}

TEST_CASE("bench writes reports with provenance") {
  Workspace ws;
  CHECK(run("bench --methods -o " + (ws / "r")).code == 1);
  const std::string flags = "--families mean_shift --methods timepred/l2,vanilla/l2 --reps 2 -T 300 -d 5 "
                            "--tolerance 5 --seed 9 --jobs 1 --omit-timings -o ";
  REQUIRE(run("bench " + flags + (ws / "r")).code == 0);
  const auto j = nlohmann::json::parse(read_file(ws / "r.json"));
  CHECK(j.at("version") == TIMEPRED_VERSION);
  CHECK(j.at("master_seed") == 9);
  CHECK(j.at("params").at("T") == 300);
  CHECK(j.at("cells").size() == 2);
  CHECK(read_file(ws / "r.csv").find("# params") != std::string::npos);
  REQUIRE(run("bench " + flags + (ws / "s")).code == 0);
  CHECK(read_file(ws / "r.json") == read_file(ws / "s.json"));

  {
    std::ofstream(ws / "cfg.json") << R"({"families": ["ar_shift"], "methods": ["wang/l2"], "n_reps": 1, "T": 200, "d": 3})";
  }
  REQUIRE(run("bench --config " + (ws / "cfg.json") + " -o " + (ws / "c")).code == 0);
  const auto c = nlohmann::json::parse(read_file(ws / "c.json"));
  CHECK(c.at("cells").at(0).at("method") == "wang/l2");
  {
    std::ofstream(ws / "bad.json") << R"({"families": 3})";
  }
  CHECK(run("bench --config " + (ws / "bad.json") + " -o " + (ws / "c")).code == 1);
}
