#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "timepred/benchgen.hpp"
#include "timepred/matrix.hpp"

namespace timepred {

enum class MatrixFormat { Binary, Csv };

/// Binary layout: "TPD1", T (u32 LE), d (u32 LE), then T*d f64 LE row-major.
std::vector<std::uint8_t> encode_matrix_binary(const TimeSeriesMatrix& m);
TimeSeriesMatrix decode_matrix_binary(const std::vector<std::uint8_t>& bytes);

/// One row per time step, 17 significant digits. Lines starting with '#'
/// carry provenance and are skipped by the reader, as is a non-numeric
/// header row.
std::string encode_matrix_csv(const TimeSeriesMatrix& m, const std::vector<std::string>& comments = {});
TimeSeriesMatrix decode_matrix_csv(const std::string& text);

/// Binary when the file starts with the TPD1 magic, CSV otherwise.
TimeSeriesMatrix read_matrix(const std::string& path);
void write_matrix(const std::string& path, const TimeSeriesMatrix& m, MatrixFormat format,
                  const std::vector<std::string>& comments = {});

/// Writes to a sibling temporary and renames, so a failed run leaves no
/// partial file behind.
void write_file_atomic(const std::string& path, const std::string& contents);
std::string read_file(const std::string& path);

struct LabelSidecar {
  std::vector<std::size_t> true_cps;
  std::string family;
  std::uint64_t seed = 0;
  std::vector<std::size_t> affected_dims;
};

LabelSidecar sidecar_for(const LabeledDataset& ds);
/// JSON text including tool version and the given parameter block (a JSON
/// object serialized as text, may be empty).
std::string encode_sidecar(const LabelSidecar& label, std::size_t length, const std::string& params_json = "");
LabelSidecar decode_sidecar(const std::string& text, std::size_t length);

/// "<matrix path>.labels.json"
std::string sidecar_path(const std::string& matrix_path);

}  // namespace timepred
