#pragma once

// Full experiments: isolated, single-bath, generalized-initial-state,
// multi-bath and particle-exchange runs with the entropy-production hierarchy.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "obsent/graining.hpp"
#include "obsent/linalg.hpp"
#include "obsent/models.hpp"
#include "obsent/thermo.hpp"

namespace obsent {

enum class RunKind { Isolated, Open, OpenGeneralized, Multibath, Particle };
std::string to_string(RunKind kind);

enum class SystemBasisMode { Eigenbasis, Fixed };
/// Strict throws InvalidInitialState; Flag records the failure and keeps going.
enum class InitialCheck { Strict, Flag };

struct RunSettings {
  double t_max = 10.0;
  std::size_t steps = 200;
  double delta = 0.25;                  // energy window width
  std::optional<double> anchor;         // window anchor (defaults to the ground energy)
  std::vector<double> betas{1.0};       // per bath (isolated: betas[0] sets the reference state)
  std::vector<double> mus;              // per bath, particle runs only
  SystemBasisMode system_basis = SystemBasisMode::Eigenbasis;
  std::optional<ComplexMatrix> fixed_basis;  // columns; computational basis when unset
  InitialCheck initial_check = InitialCheck::Strict;
  // Quadrature tolerance is C·dt². Frozen from a one-time obsent_calibrate
  // run over the bundled configs (largest residual/dt² was 6.9e-3).
  double quadrature_constant = 0.1;
};

struct HierarchyPoint {
  double sigma_a = 0.0;
  double sigma_b = 0.0;
  double sigma_c = 0.0;
  double sigma_d = 0.0;
  double sigma_d_tilde = 0.0;
  double gap_ab = 0.0;        // I_obs(t) - I_obs(0)
  double gap_bc = 0.0;        // Σ_ν {[S_eq,ν - S_ν](t) - [S_eq,ν - S_ν](0)}
  // Σ_ν D[π_ν(β*_t) || π_ν(β_ν)] minus its t = 0 value, which vanishes for
  // product initial states but not for block-uniform bath windows.
  double gap_cd_tilde = 0.0;
  double I_obs = 0.0;
  double I_quantum = 0.0;
};

struct HierarchyReport {
  std::vector<HierarchyPoint> points;
  double r_delta = 0.0;
  double slack = 0.0;
  double quadrature_tolerance = 0.0;
};

/// Σ_a = line1 + line2 + line3 up to Clausius quadrature error.
struct DecompositionPoint {
  double line1 = 0.0;  // ΔS_S + Σ ∫β* dU_ν
  double line2 = 0.0;  // bath nonequilibrium
  double line3 = 0.0;  // I(0) - I(t)
};

struct Violation {
  std::string invariant;
  double time = 0.0;
  double value = 0.0;
  double bound = 0.0;
};

struct ThermoLedger {
  RunKind kind = RunKind::Open;
  std::vector<double> time;
  std::vector<EnergyLedgerEntry> energy;
  std::vector<double> first_law_residual;  // ΔU_S - ΣQ - W - W_chem

  // open-type runs; per-bath series are indexed [bath][time]
  std::vector<double> S_global;
  std::vector<double> S_system;
  std::vector<double> S_system_vn;
  std::vector<std::vector<double>> S_bath;
  std::vector<std::vector<double>> S_eq_bath;
  std::vector<std::vector<double>> N_bath;
  std::vector<std::vector<double>> U_bath_binned;  // Σ_x (window centre) p_x
  std::vector<std::vector<double>> clausius;  // ∫β* dU_ν (- β*μ* dN_ν)
  std::vector<double> sigma_d_rate;
  HierarchyReport hierarchy;
  std::vector<DecompositionPoint> decomposition;

  // isolated runs
  std::vector<double> epsilon;
  std::vector<double> U_total;
  std::vector<double> S_obs;
  std::vector<double> sigma;
  std::vector<double> clausius_isolated;   // Σ β̄ đQ
  std::vector<double> clausius_endpoint;   // S_eq(β*_t) - S_eq(β*_0)
  std::vector<double> S_eq;
  std::vector<double> beta_star;

  // run-level data
  double dt = 0.0;
  std::size_t steps = 0;
  Index system_dim = 0;
  double r_delta = 0.0;
  double slack = 0.0;
  double quadrature_tolerance = 0.0;
  bool initial_state_ok = true;
  double initial_state_residual = 0.0;
  bool saturated = false;
  bool grand_unsolved = false;
  std::vector<std::string> warnings;
};

ThermoLedger run_isolated(const BuiltModel& model, const RunSettings& settings, const DensityMatrix& rho0);
/// ρ_S(0) ⊗ π_B(β₀) for the first bath of `model`.
ThermoLedger run_open(const BuiltModel& model, const RunSettings& settings, const ComplexMatrix& rho_s0);
/// ρ_SB(0) = Σ p(s₀, E_B) |s₀⟩⟨s₀| ⊗ ω_B(E_B); `joint` is ordered like
/// open_initial_graining(model, settings).
ThermoLedger run_open_generalized(const BuiltModel& model, const RunSettings& settings,
                                  const OutcomeDistribution& joint);
/// ρ_S(0) ⊗ π_1(β_1) ⊗ ... ⊗ π_n(β_n).
ThermoLedger run_multibath(const BuiltModel& model, const RunSettings& settings, const ComplexMatrix& rho_s0);
/// ρ_S(0) ⊗ Ξ_1(β_1, μ_1) ⊗ ...; throws NonConserving / NonCommuting.
ThermoLedger run_particle(const BuiltModel& model, const RunSettings& settings, const ComplexMatrix& rho_s0);

/// The {|s₀⟩} ⊗ E_B graining used for generalized initial states.
CoarseGraining open_initial_graining(const BuiltModel& model, const RunSettings& settings);
/// Σ_E tr{Π_E π_B(β)} ω_B(E) bin weights times p(s₀), ordered like open_initial_graining.
OutcomeDistribution product_initial_joint(const BuiltModel& model, const RunSettings& settings,
                                          std::span<const double> system_populations);

/// Initial states for isolated runs.
DensityMatrix coarse_gibbs_state(const HermitianOperator& h, double beta, double delta,
                                 std::optional<double> anchor = std::nullopt);

/// Ordering Σ_a ≤ Σ_b ≤ Σ_c ≤ Σ̃_d is only asserted for uncorrelated starts;
/// correlated generalized runs get Σ_a ≥ 0, the identities and the decomposition.
std::vector<Violation> check_hierarchy(const ThermoLedger& ledger);

/// max_t |Σ̃_d - Σ_c - gap_cd_tilde - (ΔS_vN[ρ_S] - ΔS_S)|; pure Clausius
/// quadrature error (isolated: max_t |Σ β̄ đQ - ΔS_eq|).
double clausius_closure_residual(const ThermoLedger& ledger);
double max_first_law_residual(const ThermoLedger& ledger);

struct ConjectureRow {
  double time = 0.0;
  double line1 = 0.0;
  double line2_abs = 0.0;
  double line3_abs = 0.0;
};

struct ConjectureReport {
  std::vector<ConjectureRow> rows;
  double line1_rate = 0.0;      // least-squares slope over the second half
  double line2_rate = 0.0;
  double line3_plateau = 0.0;   // mean |line3| over the last quarter
  std::string table() const;
};

/// Informational only; nothing is asserted.
ConjectureReport conjecture_report(const ThermoLedger& ledger);

}  // namespace obsent
