#pragma once

#include <stdexcept>
#include <string>

namespace hlip {

enum class ErrorCode {
  InvalidParams,
  EmptyInput,
  InsufficientData,
  NotDeadbeat,
  UnstableMatrix,
  NoConvergence,
  InvalidKind,
  IllConditioned,
  OutOfRange,
  Parse,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidParams: return "invalid-params";
    case ErrorCode::EmptyInput: return "empty-input";
    case ErrorCode::InsufficientData: return "insufficient-data";
    case ErrorCode::NotDeadbeat: return "not-deadbeat";
    case ErrorCode::UnstableMatrix: return "unstable-matrix";
    case ErrorCode::NoConvergence: return "no-convergence";
    case ErrorCode::InvalidKind: return "invalid-kind";
    case ErrorCode::IllConditioned: return "ill-conditioned";
    case ErrorCode::OutOfRange: return "out-of-range";
    case ErrorCode::Parse: return "parse-error";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace hlip
