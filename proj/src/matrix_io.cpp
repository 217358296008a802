#include "timepred/matrix_io.hpp"

#include <bit>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

#include "timepred/error.hpp"

namespace timepred {
namespace {

constexpr char kMatrixMagic[4] = {'T', 'P', 'D', '1'};
constexpr std::size_t kHeaderBytes = 12;

std::uint32_t read_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

void append_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_row(std::string_view line, std::vector<double>& out) {
  out.clear();
  std::size_t pos = 0;
  for (;;) {
    const std::size_t comma = line.find(',', pos);
    const std::string_view field =
        trim(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
    double v = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    if (!field.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last || field.empty()) return false;
    out.push_back(v);
    if (comma == std::string_view::npos) return true;
    pos = comma + 1;
  }
}

}  // namespace

std::vector<std::uint8_t> encode_matrix_binary(const TimeSeriesMatrix& m) {
  if (m.rows() > 0xFFFFFFFFu || m.cols() > 0xFFFFFFFFu) fail(ErrorKind::Format, "matrix too large for TPD1");
  std::vector<std::uint8_t> out(std::begin(kMatrixMagic), std::end(kMatrixMagic));
  out.reserve(kHeaderBytes + 8 * m.values().size());
  append_u32(out, static_cast<std::uint32_t>(m.rows()));
  append_u32(out, static_cast<std::uint32_t>(m.cols()));
  for (double v : m.values()) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
  }
  return out;
}

TimeSeriesMatrix decode_matrix_binary(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kHeaderBytes || std::memcmp(bytes.data(), kMatrixMagic, 4) != 0) {
    fail(ErrorKind::Format, "missing TPD1 header");
  }
  const std::size_t rows = read_u32(bytes.data() + 4);
  const std::size_t cols = read_u32(bytes.data() + 8);
  const std::size_t expected = kHeaderBytes + 8 * rows * cols;
  if (bytes.size() != expected) {
    fail(ErrorKind::Format, "binary matrix is " + std::to_string(bytes.size()) + " bytes, header implies " +
                                std::to_string(expected));
  }
  if (rows == 0 || cols == 0) fail(ErrorKind::Format, "binary matrix has an empty shape");
  std::vector<double> values(rows * cols);
  const std::uint8_t* p = bytes.data() + kHeaderBytes;
  for (double& v : values) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(p[b]) << (8 * b);
    v = std::bit_cast<double>(bits);
    p += 8;
  }
  return TimeSeriesMatrix(rows, cols, std::move(values));
}

std::string encode_matrix_csv(const TimeSeriesMatrix& m, const std::vector<std::string>& comments) {
  std::string out;
  for (const auto& c : comments) out += "# " + c + "\n";
  char buf[32];
  for (std::size_t t = 0; t < m.rows(); ++t) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      const int n = std::snprintf(buf, sizeof buf, "%.17g", m(t, j));
      if (j > 0) out += ',';
      out.append(buf, static_cast<std::size_t>(n));
    }
    out += '\n';
  }
  return out;
}

TimeSeriesMatrix decode_matrix_csv(const std::string& text) {
  std::vector<double> values;
  std::vector<double> row;
  std::size_t cols = 0, rows = 0, line_no = 0;
  bool seen_data = false;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    const std::string_view line = trim(std::string_view(text).substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    if (!parse_row(line, row)) {
      if (!seen_data) {
        seen_data = true;  // header row
        continue;
      }
      fail(ErrorKind::Format, "malformed CSV at line " + std::to_string(line_no));
    }
    if (rows == 0) cols = row.size();
    if (row.size() != cols) {
      fail(ErrorKind::Format, "CSV line " + std::to_string(line_no) + " has " + std::to_string(row.size()) +
                                  " fields, expected " + std::to_string(cols));
    }
    seen_data = true;
    values.insert(values.end(), row.begin(), row.end());
    ++rows;
  }
  if (rows == 0) fail(ErrorKind::Format, "CSV contains no data rows");
  return TimeSeriesMatrix(rows, cols, std::move(values));
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot open '" + path + "' for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) {
      std::filesystem::remove(tmp);
      fail(ErrorKind::Io, "failed writing '" + path + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    fail(ErrorKind::Io, "cannot move output into place at '" + path + "': " + ec.message());
  }
}

TimeSeriesMatrix read_matrix(const std::string& path) {
  const std::string contents = read_file(path);
  if (contents.size() >= 4 && std::memcmp(contents.data(), kMatrixMagic, 4) == 0) {
    return decode_matrix_binary(std::vector<std::uint8_t>(contents.begin(), contents.end()));
  }
  return decode_matrix_csv(contents);
}

void write_matrix(const std::string& path, const TimeSeriesMatrix& m, MatrixFormat format,
                  const std::vector<std::string>& comments) {
  if (format == MatrixFormat::Binary) {
    const auto bytes = encode_matrix_binary(m);
    write_file_atomic(path, std::string(bytes.begin(), bytes.end()));
  } else {
    write_file_atomic(path, encode_matrix_csv(m, comments));
  }
}

LabelSidecar sidecar_for(const LabeledDataset& ds) {
  LabelSidecar s;
  if (!ds.degenerate) s.true_cps = {ds.true_cp};
  s.family = to_string(ds.family);
  s.seed = ds.seed;
  s.affected_dims = ds.affected_dims;
  return s;
}

std::string encode_sidecar(const LabelSidecar& label, std::size_t length, const std::string& params_json) {
  for (std::size_t cp : label.true_cps) {
    if (cp == 0 || cp >= length) fail(ErrorKind::Format, "change point outside (0, T)");
  }
  nlohmann::ordered_json j;
  j["tool"] = "timepred";
  j["version"] = TIMEPRED_VERSION;
  j["true_cps"] = label.true_cps;
  j["family"] = label.family;
  j["seed"] = label.seed;
  j["affected_dims"] = label.affected_dims;
  j["T"] = length;
  if (!params_json.empty()) j["params"] = nlohmann::ordered_json::parse(params_json);
  return j.dump(2) + "\n";
}

LabelSidecar decode_sidecar(const std::string& text, std::size_t length) {
  LabelSidecar s;
  try {
    const auto j = nlohmann::json::parse(text);
    s.true_cps = j.at("true_cps").get<std::vector<std::size_t>>();
    s.family = j.at("family").get<std::string>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.affected_dims = j.at("affected_dims").get<std::vector<std::size_t>>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Format, std::string("malformed label sidecar: ") + e.what());
  }
  for (std::size_t cp : s.true_cps) {
    if (cp == 0 || cp >= length) fail(ErrorKind::Format, "label change point outside (0, T)");
  }
  return s;
}

std::string sidecar_path(const std::string& matrix_path) { return matrix_path + ".labels.json"; }

}  // namespace timepred
