#include "kahlerlab/error.hpp"

namespace kahlerlab {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonFiniteProfile: return "NonFiniteProfile";
    case ErrorCode::ToleranceNotMet: return "ToleranceNotMet";
    case ErrorCode::PositivityLost: return "PositivityLost";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::WindowEmpty: return "WindowEmpty";
    case ErrorCode::MissingParam: return "MissingParam";
    case ErrorCode::InconsistentTraces: return "InconsistentTraces";
    case ErrorCode::ProfileMismatchDomain: return "ProfileMismatchDomain";
    case ErrorCode::HypothesisFailed: return "HypothesisFailed";
    case ErrorCode::BlocksIncomplete: return "BlocksIncomplete";
    case ErrorCode::RootNotBracketed: return "RootNotBracketed";
    case ErrorCode::CrossTermTooLarge: return "CrossTermTooLarge";
    case ErrorCode::StepRejected: return "StepRejected";
    case ErrorCode::MissingHistory: return "MissingHistory";
    case ErrorCode::RangeExceeded: return "RangeExceeded";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace kahlerlab
