#pragma once

// Entropy and information functionals. All values in nats; 0 ln 0 = 0 and
// probabilities below 1e-14 count as exact zeros.

#include <span>
#include <vector>

#include "obsent/graining.hpp"
#include "obsent/linalg.hpp"

namespace obsent {

/// Row-major N-dimensional probability table.
struct ProbabilityTable {
  std::vector<std::size_t> shape;
  std::vector<double> p;

  std::vector<double> marginal(std::size_t axis) const;
};

struct EntropyDecomposition {
  double dephased_vn = 0.0;   // S_vN[Σ_x p_x ρ(x)]
  double avg_relative = 0.0;  // Σ_x p_x D[ρ(x) || ω(x)]
  std::vector<double> per_outcome_relative;  // D[ρ(x) || ω(x)], 0 for p_x = 0
};

struct MembershipResult {
  bool member = false;
  double residual = 0.0;  // max|ρ - Σ_x p_x ω(x)|
};

double shannon(std::span<const double> p);
double vn_entropy(const DensityMatrix& rho);
double vn_entropy_of_spectrum(const RealVector& eigenvalues);

/// Σ_x p_x (-ln p_x + ln V_x).
double obs_entropy(const DensityMatrix& rho, const CoarseGraining& x);
double obs_entropy(std::span<const double> p, std::span<const Index> volumes);

/// S_Sh(p_x) + Σ_x p_x S_B(x).
double obs_entropy_shannon_form(const OutcomeDistribution& p);

/// ln V_x for the outcome carrying `label`.
double boltzmann_entropy(const CoarseGraining& x, const OutcomeLabel& label);

/// tr{ρ(ln ρ - ln σ)}; throws InfiniteDivergence when supp ρ ⊄ supp σ.
double relative_entropy(const DensityMatrix& rho, const DensityMatrix& sigma);
/// Classical D(p || q) for distributions on the same outcome set.
double relative_entropy(std::span<const double> p, std::span<const double> q);

/// joint(i, j) table; rows index the first party.
double mutual_information_classical(const Eigen::MatrixXd& joint);
/// I_{X:Y} with X the factors listed in `first_party` and Y the rest.
double mutual_information_quantum(const DensityMatrix& rho, std::span<const std::size_t> first_party);
/// Σ_j S(p_j) - S(p_joint).
double total_information(const ProbabilityTable& joint);

EntropyDecomposition decompose_obs_entropy(const DensityMatrix& rho, const CoarseGraining& x);

/// ω(x) = Π_x / V_x.
DensityMatrix microcanonical_state(const CoarseGraining& x, std::size_t outcome);
DensityMatrix microcanonical_state(const CoarseGraining& x, const OutcomeLabel& label);

/// Σ_x p_x ω(x) with p taken from `rho` itself, compared entrywise.
MembershipResult is_equilibrium_member(const DensityMatrix& rho, const CoarseGraining& x, double tol);

/// Σ_x p_x ω(x) for arbitrary weights.
ComplexMatrix block_uniform_state(const CoarseGraining& x, std::span<const double> p);

}  // namespace obsent
