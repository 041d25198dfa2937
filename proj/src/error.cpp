#include "tsdyn/error.hpp"

namespace tsdyn {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonMonotonePoints: return "NonMonotonePoints";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::DegenerateInterval: return "DegenerateInterval";
    case ErrorCode::InvalidBase: return "InvalidBase";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::EmptySupport: return "EmptySupport";
    case ErrorCode::BadRange: return "BadRange";
    case ErrorCode::SupportMismatch: return "SupportMismatch";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ScaleMismatch: return "ScaleMismatch";
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::UnknownVariable: return "UnknownVariable";
    case ErrorCode::DomainViolation: return "DomainViolation";
    case ErrorCode::NonFiniteResult: return "NonFiniteResult";
    case ErrorCode::BracketViolation: return "BracketViolation";
    case ErrorCode::FamilyTooShort: return "FamilyTooShort";
    case ErrorCode::CriterionNotSatisfied: return "CriterionNotSatisfied";
    case ErrorCode::ShapeViolation: return "ShapeViolation";
    case ErrorCode::NonpositiveEndpoint: return "NonpositiveEndpoint";
    case ErrorCode::BoundOrderViolation: return "BoundOrderViolation";
    case ErrorCode::EnvelopeViolation: return "EnvelopeViolation";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message,
             std::optional<std::size_t> where)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code),
      where_(where) {}

}  // namespace tsdyn
