#pragma once

// Numerical tolerances shared by all modules. Values are absolute unless the
// name says otherwise.
namespace obsent::tol {

inline constexpr double kHermitian = 1e-10;        // relative to max(1, max|A|)
inline constexpr double kReconstruction = 1e-9;    // relative to max(1, max|Λ|)
inline constexpr double kOrthonormal = 1e-10;
inline constexpr double kUnitary = 1e-10;
inline constexpr double kTrace = 1e-12;
inline constexpr double kPositivity = 1e-10;
inline constexpr double kProjector = 1e-10;
inline constexpr double kBinEdge = 1e-9;
inline constexpr double kDegenerate = 1e-9;
inline constexpr double kCommute = 1e-9;
inline constexpr double kNormalized = 1e-10;
inline constexpr double kNormalizedLoose = 1e-8;
inline constexpr double kNegativeClamp = 1e-12;
inline constexpr double kZeroProbability = 1e-14;
inline constexpr double kSupport = 1e-10;
inline constexpr double kImaginary = 1e-10;
inline constexpr double kSaturationEdge = 1e-12;
inline constexpr double kBetaResidual = 1e-10;     // relative to spectral width
inline constexpr double kBetaMaxScale = 1e6;       // β_max = kBetaMaxScale / width
inline constexpr double kGrandResidual = 1e-7;     // relative to scale
inline constexpr double kFloatSlack = 1e-9;
inline constexpr double kGapIdentity = 1e-8;
inline constexpr double kFtKey = 1e-12;            // relative grouping key for Δs

}  // namespace obsent::tol
