#pragma once

// Two-point measurement statistics of observational entropy and the
// integral / detailed fluctuation theorems, by exact summation.

#include <memory>
#include <vector>

#include "obsent/dynamics.hpp"
#include "obsent/graining.hpp"
#include "obsent/lawsuite.hpp"
#include "obsent/linalg.hpp"
#include "obsent/models.hpp"

namespace obsent {

enum class Direction { Forward, Reversed };

struct TwoPointEntry {
  std::size_t x0 = 0;  // first-measurement outcome (index into X₀)
  std::size_t xt = 0;  // second-measurement outcome (index into X_t)
  double probability = 0.0;
  double delta_s = 0.0;  // always the forward Δs of the pair
};

struct TwoPointDistribution {
  Direction direction = Direction::Forward;
  std::vector<TwoPointEntry> entries;  // x0 outer, xt inner; excluded pairs are absent
  std::shared_ptr<const CoarseGraining> x0;
  std::shared_ptr<const CoarseGraining> xt;
  std::vector<double> p_initial;  // p_{x₀}(0)
  std::vector<double> p_final;    // p_{x_t}(t) of the undisturbed evolved state
  bool zero_probability_outcome = false;
  double total_probability = 0.0;  // mass over all pairs, excluded ones included

  double mean_delta_s() const;
};

TwoPointDistribution forward_two_point(const DensityMatrix& rho0, const Propagator& u, const CoarseGraining& x0,
                                       const CoarseGraining& xt);

/// Reversed process started from Σ p_{x_t}(t) Π^Θ_{x_t}/V_{x_t}, evolved by
/// the reversed protocol, ending in Π^Θ_{x₀}. Entries align with `forward`.
TwoPointDistribution reversed_two_point(const TwoPointDistribution& forward, const Protocol& p);
/// Same, with U_Θ supplied directly.
TwoPointDistribution reversed_two_point(const TwoPointDistribution& forward, const ComplexMatrix& u_theta);

struct IftResult {
  double value = 0.0;  // Σ p e^{-Δs}
  bool precondition_violated = false;
};
IftResult ift_average(const TwoPointDistribution& d);

/// max over pairs of |p^fw - e^{Δs} p^tr|; throws LabelMismatch.
double central_relation_check(const TwoPointDistribution& fwd, const TwoPointDistribution& rev);

struct FtRow {
  double delta_s = 0.0;
  double p_forward = 0.0;   // P_fw(Δs)
  double q_reversed = 0.0;  // Q_tr(-Δs)
  double ratio = 0.0;       // P_fw / Q_tr, NaN when Q_tr = 0
  double expected_ratio = 0.0;  // e^{Δs}
};

struct FtBin {
  double lower = 0.0;
  double upper = 0.0;
  double p_forward = 0.0;
  double q_reversed = 0.0;
};

struct DetailedFt {
  std::vector<FtRow> rows;              // one per distinct Δs
  double max_relative_error = 0.0;      // max |ratio/e^{Δs} - 1| over rows with Q_tr > 0
  double equal_initial_residual = 0.0;  // max_x₀ |p^fw_{x₀}(0) - p^tr_{x₀}(t)|
  bool equal_initial = false;           // residual ≤ 1e-9
  double max_relative_error_tr = 0.0;   // P_fw(Δs)/P_tr(-Δs) vs e^{Δs}, meaningful when equal_initial
  std::vector<FtBin> bins;              // plot export only
};

/// Groups by exact Δs (relative key 1e-12); `bins` > 0 also fills a uniform histogram.
DetailedFt detailed_ft_histograms(const TwoPointDistribution& fwd, const TwoPointDistribution& rev,
                                  std::size_t bins = 0);

/// Quench/ramp fluctuation experiment: ρ(0) diagonal in the eigenbasis of
/// H_S(λ₀) times block-uniform bath windows, X = eigenbasis(H_S(λ)) ⊗ E_B.
struct FluctuationResult {
  TwoPointDistribution forward;
  TwoPointDistribution reversed;
  IftResult ift;
  double central_residual = 0.0;
  double mean_delta_s = 0.0;
  double delta_S_obs = 0.0;  // S_obs^{X_t}(ρ(t)) - S_obs^{X₀}(ρ(0))
  DetailedFt detailed;
  bool initial_member = true;
  double initial_residual = 0.0;
};

/// system_populations are over the H_S(λ₀) eigenbasis (ascending energy);
/// empty means Gibbs at betas[0]. `coherence` > 0 adds a real off-diagonal
/// term between the first two system levels (the counterexample state).
FluctuationResult run_fluctuation(const BuiltModel& model, const RunSettings& settings,
                                  std::vector<double> system_populations = {}, double coherence = 0.0,
                                  std::size_t bins = 0);

}  // namespace obsent
