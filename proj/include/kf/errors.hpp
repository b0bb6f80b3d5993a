#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kf {

struct ParseError : std::runtime_error {
  std::size_t offset;
  ParseError(const std::string& msg, std::size_t off)
      : std::runtime_error(msg + " at offset " + std::to_string(off)), offset(off) {}
};

struct SignatureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct JsonError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EvalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised when the oracle cannot settle a query within its bounds and the
// caller runs under the strict policy.
struct OracleExhausted : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InconsistentTheory : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace kf
