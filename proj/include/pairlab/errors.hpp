#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pairlab {

enum class ErrorKind {
  NonFiniteValue,
  ToleranceNotMet,
  EmptyIntersection,
  DegenerateLevel,
  AssumptionViolation,
  WindowTooLarge,
  FormMismatch,
  CylAverageDiverged,
  NoConvergence,
  CrossValidationMismatch,
  BoundViolated,
  NoApparentConvergence,
  NotSobolev,
  InequalityViolated,
  GapAboveTolerance,
  UnknownCheck,
  SpecError,
  InvalidArgument,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries one of the kinds above so that
/// the scenario runner can map it onto a report entry or an exit code.
class LabError : public std::runtime_error {
 public:
  LabError(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonFiniteValue: return "NonFiniteValue";
    case ErrorKind::ToleranceNotMet: return "ToleranceNotMet";
    case ErrorKind::EmptyIntersection: return "EmptyIntersection";
    case ErrorKind::DegenerateLevel: return "DegenerateLevel";
    case ErrorKind::AssumptionViolation: return "AssumptionViolation";
    case ErrorKind::WindowTooLarge: return "WindowTooLarge";
    case ErrorKind::FormMismatch: return "FormMismatch";
    case ErrorKind::CylAverageDiverged: return "CylAverageDiverged";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::CrossValidationMismatch: return "CrossValidationMismatch";
    case ErrorKind::BoundViolated: return "BoundViolated";
    case ErrorKind::NoApparentConvergence: return "NoApparentConvergence";
    case ErrorKind::NotSobolev: return "NotSobolev";
    case ErrorKind::InequalityViolated: return "InequalityViolated";
    case ErrorKind::GapAboveTolerance: return "GapAboveTolerance";
    case ErrorKind::UnknownCheck: return "UnknownCheck";
    case ErrorKind::SpecError: return "SpecError";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace pairlab
