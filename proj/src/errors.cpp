#include "smpm/errors.hpp"

namespace smpm {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfiguration: return "CONFIGURATION_ERROR";
    case ErrorCode::kInvalidProblem: return "INVALID_PROBLEM";
    case ErrorCode::kUnsupportedExact: return "UNSUPPORTED_EXACT";
    case ErrorCode::kDegenerateSample: return "DEGENERATE_SAMPLE";
    case ErrorCode::kUnsupported: return "UNSUPPORTED";
    case ErrorCode::kHypothesisViolation: return "HYPOTHESIS_VIOLATION";
    case ErrorCode::kNumericalDivergence: return "NUMERICAL_DIVERGENCE";
    case ErrorCode::kIo: return "IO_ERROR";
  }
  return "UNKNOWN";
}

}  // namespace smpm
