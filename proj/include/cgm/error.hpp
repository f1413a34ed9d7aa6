#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cgm {

enum class ErrorCode {
  Infeasible,
  MaxIterations,
  ScheduleInvalid,
  DegenerateStart,
  SingularMatrix,
  UnsupportedConstraintSet,
  ReferenceMissing,
  BarrierFailure,
  StartInfeasible,
  ParseError,
  ValidationError,
  EmptySeries,
  IoError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::MaxIterations: return "MaxIterations";
    case ErrorCode::ScheduleInvalid: return "ScheduleInvalid";
    case ErrorCode::DegenerateStart: return "DegenerateStart";
    case ErrorCode::SingularMatrix: return "SingularMatrix";
    case ErrorCode::UnsupportedConstraintSet: return "UnsupportedConstraintSet";
    case ErrorCode::ReferenceMissing: return "ReferenceMissing";
    case ErrorCode::BarrierFailure: return "BarrierFailure";
    case ErrorCode::StartInfeasible: return "StartInfeasible";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::EmptySeries: return "EmptySeries";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Single exception type for the library. `code()` identifies the failure;
/// solver loops attach the iteration at which it happened.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::optional<std::size_t> iteration = {})
      : std::runtime_error(format(code, message, iteration)),
        code_(code),
        detail_(message),
        iteration_(iteration) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }
  std::optional<std::size_t> iteration() const noexcept { return iteration_; }

  Error at_iteration(std::size_t t) const { return Error(code_, detail_, t); }

 private:
  static std::string format(ErrorCode code, const std::string& message,
                            std::optional<std::size_t> iteration) {
    std::string out(to_string(code));
    if (iteration) out += " at iteration " + std::to_string(*iteration);
    if (!message.empty()) out += ": " + message;
    return out;
  }

  ErrorCode code_;
  std::string detail_;
  std::optional<std::size_t> iteration_;
};

}  // namespace cgm
