#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace lyapunov {

enum class ErrorCode {
  InvalidArgument,
  DegenerateMap,
  DegreeError,
  IterationOverflow,
  RootFindingDivergence,
  AmbiguousMatch,
  ModeUnavailable,
  PreimageFailure,
  CriticalPointInput,
  DegreeCapExceeded,
  InternalInconsistency,
  NonRationalMap,
  ParseError,
};

constexpr std::string_view code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DegenerateMap: return "DegenerateMap";
    case ErrorCode::DegreeError: return "DegreeError";
    case ErrorCode::IterationOverflow: return "IterationOverflow";
    case ErrorCode::RootFindingDivergence: return "RootFindingDivergence";
    case ErrorCode::AmbiguousMatch: return "AmbiguousMatch";
    case ErrorCode::ModeUnavailable: return "ModeUnavailable";
    case ErrorCode::PreimageFailure: return "PreimageFailure";
    case ErrorCode::CriticalPointInput: return "CriticalPointInput";
    case ErrorCode::DegreeCapExceeded: return "DegreeCapExceeded";
    case ErrorCode::InternalInconsistency: return "InternalInconsistency";
    case ErrorCode::NonRationalMap: return "NonRationalMap";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

/// Usage errors (bad input) versus numeric failures (the computation could
/// not be carried out at the configured precision or caps).
constexpr bool is_numeric_failure(ErrorCode code) {
  switch (code) {
    case ErrorCode::IterationOverflow:
    case ErrorCode::RootFindingDivergence:
    case ErrorCode::AmbiguousMatch:
    case ErrorCode::PreimageFailure:
    case ErrorCode::DegreeCapExceeded:
    case ErrorCode::InternalInconsistency:
      return true;
    default:
      return false;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(code_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t position, const std::string& message)
      : Error(ErrorCode::ParseError, message + " at position " + std::to_string(position)),
        position_(position) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

}  // namespace lyapunov
