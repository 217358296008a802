#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "timepred/benchgen.hpp"
#include "timepred/error.hpp"
#include "timepred/matrix_io.hpp"

using namespace timepred;
namespace fs = std::filesystem;

namespace {

ErrorKind kind_of(const std::function<void()>& thunk) {
  try {
    thunk();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return ErrorKind::Config;
}

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / ("timepred_io_" + std::to_string(::getpid()))) {
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("binary matrices have the documented layout") {
  const TimeSeriesMatrix m(2, 3, {1, 2, 3, 4, 5, 6.5});
  const auto bytes = encode_matrix_binary(m);
  REQUIRE(bytes.size() == 12 + 8 * 6);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "TPD1");
  CHECK(bytes[4] == 2);
  CHECK(bytes[8] == 3);
  double last = 0.0;
  std::memcpy(&last, bytes.data() + 12 + 8 * 5, 8);
  CHECK(last == 6.5);
  CHECK(decode_matrix_binary(bytes) == m);
}

TEST_CASE("binary decoding rejects malformed input") {
  const auto bytes = encode_matrix_binary(oracle::random_series(4, 2, 1));
  auto truncated = bytes;
  truncated.pop_back();
  CHECK(kind_of([&] { decode_matrix_binary(truncated); }) == ErrorKind::Format);
  auto padded = bytes;
  padded.push_back(0);
  CHECK(kind_of([&] { decode_matrix_binary(padded); }) == ErrorKind::Format);
  auto bad = bytes;
  bad[1] = 'Q';
  CHECK(kind_of([&] { decode_matrix_binary(bad); }) == ErrorKind::Format);
  auto nan = bytes;
  const double q = std::nan("");
  std::memcpy(nan.data() + 12, &q, 8);
  CHECK(kind_of([&] { decode_matrix_binary(nan); }) == ErrorKind::Format);
}

TEST_CASE("CSV round trip is exact with 17 significant digits") {
  const auto m = oracle::random_series(20, 4, 3, 1e3);
  const auto text = encode_matrix_csv(m, {"generated by a test"});
  CHECK(text.rfind("# generated by a test", 0) == 0);
  CHECK(decode_matrix_csv(text) == m);
}

TEST_CASE("CSV reader accepts headers and comments and rejects junk") {
  CHECK(decode_matrix_csv("a,b\n1,2\n3,4\n") == TimeSeriesMatrix(2, 2, {1, 2, 3, 4}));
  CHECK(decode_matrix_csv("# note\n1,2\n\n3,4\n") == TimeSeriesMatrix(2, 2, {1, 2, 3, 4}));
  CHECK(kind_of([] { decode_matrix_csv("1,2\n3\n"); }) == ErrorKind::Format);
  CHECK(kind_of([] { decode_matrix_csv("1,2\n3,x\n"); }) == ErrorKind::Format);
  CHECK(kind_of([] { decode_matrix_csv("1,nan\n"); }) == ErrorKind::Format);
  CHECK(kind_of([] { decode_matrix_csv(""); }) == ErrorKind::Format);
}

TEST_CASE("files round-trip in both formats and are detected automatically") {
  TempDir dir;
  ProblemSpec spec;
  spec.length = 200;
  spec.dims = 5;
  spec.seed = 4;
  const auto ds = generate(spec);
  write_matrix(dir.file("x.bin"), ds.series, MatrixFormat::Binary);
  write_matrix(dir.file("x.csv"), ds.series, MatrixFormat::Csv);
  CHECK(fs::file_size(dir.file("x.bin")) == 12 + 8 * 200 * 5);
  CHECK(read_matrix(dir.file("x.bin")) == ds.series);
  CHECK(read_matrix(dir.file("x.csv")) == ds.series);
  CHECK_FALSE(fs::exists(dir.file("x.bin.partial")));
  CHECK(kind_of([&] { read_matrix(dir.file("missing.bin")); }) == ErrorKind::Io);
  CHECK(kind_of([&] { write_file_atomic(dir.file("no/such/dir/x"), "data"); }) == ErrorKind::Io);
}

TEST_CASE("label sidecars round-trip and are validated") {
  ProblemSpec spec;
  spec.family = Family::ArShift;
  spec.length = 300;
  spec.dims = 4;
  spec.seed = 8;
  const auto ds = generate(spec);
  const auto label = sidecar_for(ds);
  CHECK(label.true_cps == std::vector<std::size_t>{ds.true_cp});
  CHECK(label.family == "ar_shift");
  const auto text = encode_sidecar(label, 300, "{\"T\": 300}");
  CHECK(text.find("\"version\"") != std::string::npos);
  const auto back = decode_sidecar(text, 300);
  CHECK(back.true_cps == label.true_cps);
  CHECK(back.seed == 8);
  CHECK(back.affected_dims == label.affected_dims);
  CHECK(kind_of([&] { decode_sidecar(text, ds.true_cp); }) == ErrorKind::Format);
  CHECK(kind_of([] { decode_sidecar("{}", 10); }) == ErrorKind::Format);
  CHECK(sidecar_path("data/x.bin") == "data/x.bin.labels.json");
}
