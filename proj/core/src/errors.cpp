#include "obsent/errors.hpp"

namespace obsent {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NotOrthonormal: return "NotOrthonormal";
    case ErrorCode::NonCommuting: return "NonCommuting";
    case ErrorCode::NotNormalized: return "NotNormalized";
    case ErrorCode::UnknownOutcome: return "UnknownOutcome";
    case ErrorCode::InfiniteDivergence: return "InfiniteDivergence";
    case ErrorCode::EnergyOutOfRange: return "EnergyOutOfRange";
    case ErrorCode::WrongLabelKind: return "WrongLabelKind";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::SaturatedTemperature: return "SaturatedTemperature";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::SupportMismatch: return "SupportMismatch";
    case ErrorCode::InvalidInitialState: return "InvalidInitialState";
    case ErrorCode::NonConserving: return "NonConserving";
    case ErrorCode::SpecInvalid: return "SpecInvalid";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::LabelMismatch: return "LabelMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace obsent
