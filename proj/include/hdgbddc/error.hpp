#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hdgbddc {

enum class ErrorCode {
  InvalidArgument,
  InconsistentPartition,
  SingularMass,
  AssumptionViolation,
  SingularLocalBlock,
  DimensionMismatch,
  SingularCoarse,
  SingularLocal,
  Breakdown,
  MaxIterations,
  Io,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InconsistentPartition: return "InconsistentPartition";
    case ErrorCode::SingularMass: return "SingularMass";
    case ErrorCode::AssumptionViolation: return "AssumptionViolation";
    case ErrorCode::SingularLocalBlock: return "SingularLocalBlock";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::SingularCoarse: return "SingularCoarse";
    case ErrorCode::SingularLocal: return "SingularLocal";
    case ErrorCode::Breakdown: return "Breakdown";
    case ErrorCode::MaxIterations: return "MaxIterations";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

/// Library exception. Every failure mode of the solver pipeline maps to one code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace hdgbddc
