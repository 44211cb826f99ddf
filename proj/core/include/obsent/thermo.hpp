#pragma once

// Equilibrium ensembles, effective temperature and chemical potential, and
// the energy bookkeeping (work, heat, chemical work, Clausius sums).

#include <optional>
#include <span>
#include <vector>

#include "obsent/graining.hpp"
#include "obsent/linalg.hpp"

namespace obsent {

struct EffectiveTemperature {
  double beta_star = 0.0;
  double achieved_energy = 0.0;
  double residual = 0.0;  // achieved - target
  bool saturated = false;
  int iterations = 0;
};

struct GrandPotentialPoint {
  double beta_star = 0.0;
  double mu_star = 0.0;
  double residual_energy = 0.0;
  double residual_particles = 0.0;
  bool solved = false;
  bool used_fallback = false;
  int iterations = 0;
};

struct EnergyLedgerEntry {
  double time = 0.0;
  double U_S = 0.0;
  std::vector<double> U_B;
  double W = 0.0;
  double W_chem = 0.0;
  std::vector<double> Q;
  std::vector<double> beta_star;
  std::optional<std::vector<double>> mu_star;
  double epsilon_hat = 0.0;
};

/// Common eigenbasis of commuting H and N, with per-vector energies and
/// particle numbers.
struct JointSpectrum {
  RealVector energies;
  RealVector particles;
  ComplexMatrix vectors;
};

JointSpectrum joint_spectrum(const HermitianOperator& h, const HermitianOperator& n);

/// e^{-βH}/Z. `dims` defaults to a single factor.
DensityMatrix gibbs_state(const HermitianOperator& h, double beta, Dims dims = {});
/// e^{-β(H - μN)}/Z; throws NonCommuting.
DensityMatrix grand_canonical_state(const HermitianOperator& h, const HermitianOperator& n, double beta,
                                    double mu, Dims dims = {});

/// Occupations of the Gibbs state over a list of energies (any order).
RealVector gibbs_populations(const RealVector& energies, double beta);
/// Occupations ∝ e^{-βE + αN}.
RealVector grand_populations(const RealVector& energies, const RealVector& particles, double beta,
                             double alpha);

struct EquilibriumPoint {
  double energy = 0.0;
  double particles = 0.0;
  double entropy = 0.0;
};

EquilibriumPoint gibbs_point(const RealVector& energies, double beta);
EquilibriumPoint grand_point(const RealVector& energies, const RealVector& particles, double beta,
                             double alpha);

/// β²[⟨H²⟩ - ⟨H⟩²] in π(β).
double heat_capacity(const HermitianOperator& h, double beta);

/// β* with tr{Hπ(β*)} = target. Targets within 1e-12 of a spectral edge
/// saturate at ±1e6/width.
EffectiveTemperature effective_beta(const HermitianOperator& h, double target_energy);
EffectiveTemperature effective_beta(const RealVector& energies, double target_energy);

/// (β*, μ*) matching both ⟨H⟩ and ⟨N⟩ in the grand canonical state.
GrandPotentialPoint effective_beta_mu(const HermitianOperator& h, const HermitianOperator& n,
                                      double target_energy, double target_particles);
GrandPotentialPoint effective_beta_mu(const JointSpectrum& s, double target_energy,
                                      double target_particles);

/// V_E e^{-βE}/Z with E the window lower edge.
OutcomeDistribution coarse_gibbs_probabilities(const CoarseGraining& x, double beta);

double internal_energy(const HermitianOperator& h, const DensityMatrix& rho);
double internal_energy(const ComplexMatrix& h, const ComplexMatrix& rho);
/// tr{(H_S + V_SB) ρ_SB}; both operators on the full space.
double internal_energy_open(const HermitianOperator& hs_full, const HermitianOperator& v_sb,
                            const DensityMatrix& rho_sb);

/// Trapezoid rule over a uniform grid; the cumulative variant returns the
/// running integral at every grid point (first entry 0).
double work_integral(std::span<const double> times, std::span<const double> power);
std::vector<double> cumulative_work(std::span<const double> times, std::span<const double> power);

/// tr{(H_after - H_before) ρ}, the work of a sudden change on a frozen state.
double quench_work(const ComplexMatrix& h_before, const ComplexMatrix& h_after, const ComplexMatrix& rho);

/// Σ_k ½(β*_k + β*_{k+1}) (U_{k+1} - U_k).
double clausius_integral(std::span<const double> beta_star, std::span<const double> energy);
double clausius_integral(std::span<const EffectiveTemperature> beta_star, std::span<const double> energy);
/// Σ_k [β̄_k ΔU_k - ᾱ_k ΔN_k] with α = β*μ*.
double clausius_integral_grand(std::span<const double> beta_star, std::span<const double> beta_mu,
                               std::span<const double> energy, std::span<const double> particles);

/// Σ_ν μ*_ν dN_ν.
double chemical_work_increment(std::span<const double> mu_star, std::span<const double> dN);

struct PerturbationScale {
  double epsilon = 0.0;
  std::vector<double> q;
};

/// ε̂ = max_x |p_now/p_init - 1| and q̂ = (p_now/p_init - 1)/ε̂.
PerturbationScale perturbation_scale(const OutcomeDistribution& p_now, const OutcomeDistribution& p_init);

}  // namespace obsent
