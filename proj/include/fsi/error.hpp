#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fsi {

enum class ErrorCode {
  NotPositiveDefinite,
  EmptySampleSet,
  BadGeometry,
  UnknownTag,
  DegenerateCoefficient,
  MapDegenerate,
  SolverFailure,
  CouplingResidualExceeded,
  InsufficientHistory,
  InsufficientData,
  ParseError,
  ValidationError,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::EmptySampleSet: return "EmptySampleSet";
    case ErrorCode::BadGeometry: return "BadGeometry";
    case ErrorCode::UnknownTag: return "UnknownTag";
    case ErrorCode::DegenerateCoefficient: return "DegenerateCoefficient";
    case ErrorCode::MapDegenerate: return "MapDegenerate";
    case ErrorCode::SolverFailure: return "SolverFailure";
    case ErrorCode::CouplingResidualExceeded: return "CouplingResidualExceeded";
    case ErrorCode::InsufficientHistory: return "InsufficientHistory";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
  }
  return "Unknown";
}

}  // namespace fsi
