#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace crown {

enum class ErrorKind {
  UnsupportedFamily,
  SingularInput,
  NotInGroup,
  NumericalBreakdown,
  OmegaViolation,
  BranchBreakdown,
  PivotBreakdown,
  NonRealValue,
  InsideHull,
  RejectionStall,
  Precondition,
  Usage,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::UnsupportedFamily: return "UnsupportedFamily";
    case ErrorKind::SingularInput: return "SingularInput";
    case ErrorKind::NotInGroup: return "NotInGroup";
    case ErrorKind::NumericalBreakdown: return "NumericalBreakdown";
    case ErrorKind::OmegaViolation: return "OmegaViolation";
    case ErrorKind::BranchBreakdown: return "BranchBreakdown";
    case ErrorKind::PivotBreakdown: return "PivotBreakdown";
    case ErrorKind::NonRealValue: return "NonRealValue";
    case ErrorKind::InsideHull: return "InsideHull";
    case ErrorKind::RejectionStall: return "RejectionStall";
    case ErrorKind::Precondition: return "Precondition";
    case ErrorKind::Usage: return "Usage";
  }
  return "Unknown";
}

/// Single exception type for the library; the kind tells callers whether a
/// failure is an input problem or a numerical one.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Thrown by the path tracker; carries the path parameter where a minor
/// degenerated.
class BranchError : public Error {
 public:
  BranchError(const std::string& what, double t) : Error(ErrorKind::BranchBreakdown, what), t_(t) {}
  double offending_t() const noexcept { return t_; }

 private:
  double t_;
};

}  // namespace crown
