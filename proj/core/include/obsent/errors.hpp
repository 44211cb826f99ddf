#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace obsent {

enum class ErrorCode {
  ConvergenceFailure,
  DimensionMismatch,
  NotOrthonormal,
  NonCommuting,
  NotNormalized,
  UnknownOutcome,
  InfiniteDivergence,
  EnergyOutOfRange,
  WrongLabelKind,
  GridMismatch,
  SaturatedTemperature,
  LengthMismatch,
  SupportMismatch,
  InvalidInitialState,
  NonConserving,
  SpecInvalid,
  ConfigInvalid,
  LabelMismatch,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so that
// callers (the CLI in particular) can report the offending condition by name.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace obsent
