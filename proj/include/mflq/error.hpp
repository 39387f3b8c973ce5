#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mflq {

enum class ErrorCode {
  DimensionMismatch,
  NotPositiveDefinite,
  NotSymmetric,
  NonPositiveRho,
  NegativeTime,
  InvalidSignal,
  InvalidArgument,
  BlowUp,
  StepTooCoarse,
  ImaginaryAxisEigenvalue,
  SubspaceNotGraph,
  AsymmetricResult,
  NotPSD,
  NotStabilizing,
  GridMismatch,
  RegimeViolation,
  NonFiniteState,
  ParseError,
  UnknownField,
  MissingField,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Every module reports failures through this exception; the CLI turns it
/// into a JSON error record.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mflq
