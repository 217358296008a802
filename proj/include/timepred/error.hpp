#pragma once

#include <stdexcept>
#include <string>

namespace timepred {

enum class ErrorKind {
  InvalidRange,  // empty or too-short segment query
  Infeasible,    // no segmentation satisfies K / min length / jump
  Shape,         // dimension mismatch between operands
  Config,        // invalid configuration values
  Divergence,    // non-finite loss during training
  Format,        // malformed or truncated input file
  Io,            // file cannot be opened or written
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace timepred
