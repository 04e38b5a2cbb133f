#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace aimlake {

/// Failure categories raised across the toolkit. The CLI maps them to exit codes.
enum class ErrorKind {
  NonPositiveDepth,
  NonPositiveViscosity,
  GridMismatch,
  InvalidGrid,
  SingularGram,
  IndexOutOfRange,
  NegativeTime,
  SingularOperator,
  BlowUp,
  NoAbsorption,
  BackwardBlowUp,
  BudgetExceeded,
  UnsupportedMollifier,
  IllConditioned,
  NoConvergence,
  ConfigError,
  ParseError,
  IoError,
  StageFailure,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonPositiveDepth: return "NonPositiveDepth";
    case ErrorKind::NonPositiveViscosity: return "NonPositiveViscosity";
    case ErrorKind::GridMismatch: return "GridMismatch";
    case ErrorKind::InvalidGrid: return "InvalidGrid";
    case ErrorKind::SingularGram: return "SingularGram";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::NegativeTime: return "NegativeTime";
    case ErrorKind::SingularOperator: return "SingularOperator";
    case ErrorKind::BlowUp: return "BlowUp";
    case ErrorKind::NoAbsorption: return "NoAbsorption";
    case ErrorKind::BackwardBlowUp: return "BackwardBlowUp";
    case ErrorKind::BudgetExceeded: return "BudgetExceeded";
    case ErrorKind::UnsupportedMollifier: return "UnsupportedMollifier";
    case ErrorKind::IllConditioned: return "IllConditioned";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::StageFailure: return "StageFailure";
  }
  return "Unknown";
}

}  // namespace aimlake
