#pragma once

#include <stdexcept>
#include <string>

namespace pwlu {

enum class ErrorCode {
  kDegenerateParams,
  kShapeMismatch,
  kEmptyBatch,
  kInsufficientSamples,
  kScheduleViolation,
  kNonFiniteLoss,
  kBadMagic,
  kTruncated,
  kCountMismatch,
  kInvalidConfig,
  kIo,
  kFormat,
  kInvalidArgument,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace pwlu
