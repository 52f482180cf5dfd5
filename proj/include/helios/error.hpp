#pragma once

#include <stdexcept>
#include <string>

namespace helios {

/// Failure categories shared by every module. The CLI maps each to a distinct exit code.
enum class ErrorCode {
  kInvalidArgument = 2,
  kSortedness = 3,
  kShape = 4,
  kEmptyInput = 5,
  kNumeric = 6,
  kFormat = 7,
  kIo = 8,
  kMissingArtifact = 9,
  kOverflow = 10,
  kConfig = 11,
  kUsage = 12,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kSortedness: return "sortedness_violation";
    case ErrorCode::kShape: return "shape_mismatch";
    case ErrorCode::kEmptyInput: return "empty_input";
    case ErrorCode::kNumeric: return "numeric_error";
    case ErrorCode::kFormat: return "format_error";
    case ErrorCode::kIo: return "io_error";
    case ErrorCode::kMissingArtifact: return "missing_artifact";
    case ErrorCode::kOverflow: return "accumulator_overflow";
    case ErrorCode::kConfig: return "config_error";
    case ErrorCode::kUsage: return "usage_error";
  }
  return "unknown";
}

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

// Literal messages stay unallocated on the success path, which matters inside hot loops.
inline void require(bool cond, ErrorCode code, const char* what) {
  if (!cond) fail(code, what);
}

}  // namespace helios
