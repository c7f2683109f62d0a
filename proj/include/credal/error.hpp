#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace credal {

enum class ErrorCode {
  InvalidShape,
  NonFinite,
  NotNormalized,
  OutOfRange,
  LabelOutOfRange,
  InvalidInterval,
  InvalidAlpha,
  EmptyBox,
  UnknownAlpha,
  NotNested,
  DegenerateClass,
  SingleClassData,
  SolverBudgetExceeded,
  NotConverged,
  LengthMismatch,
  EmptyList,
  InvalidConfig,
  ParseError,
  SchemaVersionMismatch,
  IoError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidShape: return "InvalidShape";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::NotNormalized: return "NotNormalized";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::InvalidInterval: return "InvalidInterval";
    case ErrorCode::InvalidAlpha: return "InvalidAlpha";
    case ErrorCode::EmptyBox: return "EmptyBox";
    case ErrorCode::UnknownAlpha: return "UnknownAlpha";
    case ErrorCode::NotNested: return "NotNested";
    case ErrorCode::DegenerateClass: return "DegenerateClass";
    case ErrorCode::SingleClassData: return "SingleClassData";
    case ErrorCode::SolverBudgetExceeded: return "SolverBudgetExceeded";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptyList: return "EmptyList";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SchemaVersionMismatch: return "SchemaVersionMismatch";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

// Solver failures are reported separately from input validation (the CLI
// maps them to different exit codes).
inline bool is_solver_error(ErrorCode code) {
  return code == ErrorCode::SolverBudgetExceeded || code == ErrorCode::NotConverged;
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) throw Error(code, what);
}

}  // namespace credal
