#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tsdyn {

enum class ErrorCode {
  NonMonotonePoints,
  TooFewPoints,
  DegenerateInterval,
  InvalidBase,
  IndexOutOfRange,
  EmptySupport,
  BadRange,
  SupportMismatch,
  DimensionMismatch,
  ScaleMismatch,
  SyntaxError,
  UnknownVariable,
  DomainViolation,
  NonFiniteResult,
  BracketViolation,
  FamilyTooShort,
  CriterionNotSatisfied,
  ShapeViolation,
  NonpositiveEndpoint,
  BoundOrderViolation,
  EnvelopeViolation,
  ConfigError,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library. `where` carries the index,
/// character position or config line the failure refers to, if any.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::size_t> where = std::nullopt);

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> where() const noexcept { return where_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> where_;
};

}  // namespace tsdyn
