#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rlab {

enum class ErrorKind {
  InvalidArgument,
  NoTrapping,
  AssumptionViolated,
  BracketNotFound,
  ForbiddenRegionViolated,
  OrderViolated,
  StepFailure,
  NotAllowedAtStart,
  InconsistentParams,
  OutOfGrid,
  RegimeUndefined,
  NumericalCancellation,
  IllConditionedFit,
  NoSignChange,
  NotGroundState,
  HypothesisViolated,
  SupportViolated,
  TruncationUnsafe,
  CFLViolated,
  ConfigInvalid,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries one of the kinds above so that
/// callers (and the CLI exit-status mapping) can branch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace rlab
