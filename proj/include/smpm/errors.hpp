#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace smpm {

enum class ErrorCode {
  kConfiguration,
  kInvalidProblem,
  kUnsupportedExact,
  kDegenerateSample,
  kUnsupported,
  kHypothesisViolation,
  kNumericalDivergence,
  kIo,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Raised from inside the iteration loop; carries the iteration that produced
// the first non-finite (or exploding) value.
class DivergenceError : public Error {
 public:
  DivergenceError(std::int64_t iteration, const std::string& message)
      : Error(ErrorCode::kNumericalDivergence, message), iteration_(iteration) {}

  std::int64_t iteration() const noexcept { return iteration_; }

 private:
  std::int64_t iteration_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) throw Error(code, message);
}

}  // namespace smpm
