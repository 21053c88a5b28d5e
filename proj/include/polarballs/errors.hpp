#pragma once

#include <stdexcept>
#include <string>

namespace polarballs {

enum class ErrorCode {
  ContractViolation = 2,
  DegenerateInput,
  ParseError,
  ManifoldViolation,
  OrientationError,
  DuplicateSite,
  UnknownSite,
  EmptyInput,
  DisconnectedTerminals,
  EmptyResult,
  IoError,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ContractViolation: return "contract violation";
    case ErrorCode::DegenerateInput: return "degenerate input";
    case ErrorCode::ParseError: return "parse error";
    case ErrorCode::ManifoldViolation: return "manifold violation";
    case ErrorCode::OrientationError: return "orientation error";
    case ErrorCode::DuplicateSite: return "duplicate site";
    case ErrorCode::UnknownSite: return "unknown site";
    case ErrorCode::EmptyInput: return "empty input";
    case ErrorCode::DisconnectedTerminals: return "disconnected terminals";
    case ErrorCode::EmptyResult: return "empty result";
    case ErrorCode::IoError: return "i/o error";
  }
  return "error";
}

/// Single exception type for the library; `code()` distinguishes the failure and
/// doubles as the CLI exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace polarballs
