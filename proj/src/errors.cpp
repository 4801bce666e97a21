#include "rlab/errors.hpp"

namespace rlab {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::NoTrapping: return "NoTrapping";
    case ErrorKind::AssumptionViolated: return "AssumptionViolated";
    case ErrorKind::BracketNotFound: return "BracketNotFound";
    case ErrorKind::ForbiddenRegionViolated: return "ForbiddenRegionViolated";
    case ErrorKind::OrderViolated: return "OrderViolated";
    case ErrorKind::StepFailure: return "StepFailure";
    case ErrorKind::NotAllowedAtStart: return "NotAllowedAtStart";
    case ErrorKind::InconsistentParams: return "InconsistentParams";
    case ErrorKind::OutOfGrid: return "OutOfGrid";
    case ErrorKind::RegimeUndefined: return "RegimeUndefined";
    case ErrorKind::NumericalCancellation: return "NumericalCancellation";
    case ErrorKind::IllConditionedFit: return "IllConditionedFit";
    case ErrorKind::NoSignChange: return "NoSignChange";
    case ErrorKind::NotGroundState: return "NotGroundState";
    case ErrorKind::HypothesisViolated: return "HypothesisViolated";
    case ErrorKind::SupportViolated: return "SupportViolated";
    case ErrorKind::TruncationUnsafe: return "TruncationUnsafe";
    case ErrorKind::CFLViolated: return "CFLViolated";
    case ErrorKind::ConfigInvalid: return "ConfigInvalid";
  }
  return "Unknown";
}

}  // namespace rlab
