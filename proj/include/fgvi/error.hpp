#pragma once

#include <stdexcept>
#include <string>

namespace fgvi {

enum class ErrorCode {
  NotSquare,
  NonFinite,
  NotPositiveDefinite,
  DimMismatch,
  AlphaOutOfRange,
  NoConvergence,
  DiagonalTarget,
  EpsOutOfRange,
  NonFiniteScore,
  DegenerateQuadratic,
  InvalidArgument,
  Parse,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotSquare: return "NotSquare";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::AlphaOutOfRange: return "AlphaOutOfRange";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::DiagonalTarget: return "DiagonalTarget";
    case ErrorCode::EpsOutOfRange: return "EpsOutOfRange";
    case ErrorCode::NonFiniteScore: return "NonFiniteScore";
    case ErrorCode::DegenerateQuadratic: return "DegenerateQuadratic";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Parse: return "Parse";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so that
/// callers (and the CLI exit-code mapping) can branch on the kind of failure.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace fgvi
