#include "stochmed/error.hpp"

namespace stochmed {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::MissingValue: return "MissingValue";
    case ErrorCode::RoleConflict: return "RoleConflict";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::NormalizerOverflow: return "NormalizerOverflow";
    case ErrorCode::QuadratureError: return "QuadratureError";
    case ErrorCode::DegenerateVariance: return "DegenerateVariance";
    case ErrorCode::UnsupportedForContinuous: return "UnsupportedForContinuous";
    case ErrorCode::SingularDesign: return "SingularDesign";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

bool is_input_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingValue:
    case ErrorCode::RoleConflict:
    case ErrorCode::EmptyDataset:
    case ErrorCode::ParseError:
    case ErrorCode::DomainError:
    case ErrorCode::UnsupportedForContinuous:
      return true;
    default:
      return false;
  }
}

}  // namespace stochmed
