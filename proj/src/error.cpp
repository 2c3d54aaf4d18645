#include "pwlu/error.hpp"

namespace pwlu {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDegenerateParams: return "degenerate_params";
    case ErrorCode::kShapeMismatch: return "shape_mismatch";
    case ErrorCode::kEmptyBatch: return "empty_batch";
    case ErrorCode::kInsufficientSamples: return "insufficient_samples";
    case ErrorCode::kScheduleViolation: return "schedule_violation";
    case ErrorCode::kNonFiniteLoss: return "non_finite_loss";
    case ErrorCode::kBadMagic: return "bad_magic";
    case ErrorCode::kTruncated: return "truncated";
    case ErrorCode::kCountMismatch: return "count_mismatch";
    case ErrorCode::kInvalidConfig: return "invalid_config";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kFormat: return "format";
    case ErrorCode::kInvalidArgument: return "invalid_argument";
  }
  return "unknown";
}

}  // namespace pwlu
