#pragma once

// Randomized property checks for observational entropy, shared by the unit
// suite and the acceptance binary. Each check draws `count` instances with
// total dimension in [4, 64] and returns the number of failures together with
// the worst margin seen (negative means violated).

#include <limits>
#include <string>

#include "obsent/dynamics.hpp"
#include "support.hpp"

namespace testing {

struct PropertyTally {
  int instances = 0;
  int failures = 0;
  double worst_margin = std::numeric_limits<double>::infinity();

  void record(double margin) {
    ++instances;
    worst_margin = std::min(worst_margin, margin);
    if (margin < 0.0) ++failures;
  }
};

/// Block-uniform state Σ p_x ω(x) with random weights.
inline DensityMatrix random_member(Rng& rng, const CoarseGraining& x) {
  const auto p = rng.probabilities(x.size());
  return DensityMatrix(block_uniform_state(x, p), {x.dim()});
}

/// S_vN - 1e-9 <= S_obs <= ln d + 1e-9.
inline PropertyTally check_entropy_bounds(Rng& rng, int count) {
  PropertyTally t;
  for (int i = 0; i < count; ++i) {
    const Index n = rng.integer(4, 64);
    const DensityMatrix rho = rng.density(n);
    const CoarseGraining x = rng.graining(n);
    const double s = obs_entropy(rho, x);
    t.record(std::min(s - vn_entropy(rho) + 1e-9, std::log(static_cast<double>(n)) + 1e-9 - s));
  }
  return t;
}

/// S_obs(ρ₁⊗ρ₂, X₁⊗X₂) = S_obs(ρ₁, X₁) + S_obs(ρ₂, X₂) within 1e-9.
inline PropertyTally check_extensivity(Rng& rng, int count) {
  PropertyTally t;
  for (int i = 0; i < count; ++i) {
    const Index n1 = rng.integer(2, 8);
    const Index n2 = rng.integer(2, 64 / n1);  // n1 n2 in [4, 64]
    const DensityMatrix r1 = rng.density(n1), r2 = rng.density(n2);
    const CoarseGraining x1 = rng.graining(n1), x2 = rng.graining(n2);
    const std::vector<CoarseGraining> parts{x1, x2};
    const CoarseGraining x12 = product_graining(parts, {n1, n2});
    const DensityMatrix r12(kron(r1.matrix(), r2.matrix()), {n1, n2});
    const double err = std::abs(obs_entropy(r12, x12) - obs_entropy(r1, x1) - obs_entropy(r2, x2));
    t.record(1e-9 - err);
  }
  return t;
}

/// S_vN[dephased] + Σ p_x D[ρ(x) || ω(x)] = S_obs within 1e-9.
inline PropertyTally check_decomposition(Rng& rng, int count) {
  PropertyTally t;
  for (int i = 0; i < count; ++i) {
    const Index n = rng.integer(4, 64);
    const DensityMatrix rho = rng.density(n);
    const CoarseGraining x = rng.graining(n);
    const EntropyDecomposition d = decompose_obs_entropy(rho, x);
    const double err = std::abs(d.dephased_vn + d.avg_relative - obs_entropy(rho, x));
    t.record(std::min(1e-9 - err, d.avg_relative + 1e-10));
  }
  return t;
}

/// Both directions of "S_obs = S_vN exactly on the equilibrium set".
///
/// Forward: a member perturbed by η has residual r ~ η and passes at 1e-6;
/// then S_obs - S_vN = D(ρ || σ) <= χ²(ρ, σ) <= n² r² / λ_min(σ) with σ the
/// block-uniform state built from ρ's own outcome probabilities.
/// Backward: an exact member has |S_obs - S_vN| <= 1e-10 and must pass at 1e-6.
inline PropertyTally check_equilibrium_set(Rng& rng, int count) {
  PropertyTally t;
  for (int i = 0; i < count; ++i) {
    const Index n = rng.integer(4, 64);
    const CoarseGraining x = rng.graining(n);
    const DensityMatrix member = random_member(rng, x);
    const double gap0 = std::abs(obs_entropy(member, x) - vn_entropy(member));
    const MembershipResult m0 = is_equilibrium_member(member, x, 1e-6);
    double margin = gap0 <= 1e-10 ? (m0.member ? 1.0 : -1.0) : 1.0;

    // perturbation: mix in a little of a random full-rank state
    const double eta = 1e-8;
    const ComplexMatrix noisy = (1.0 - eta) * member.matrix() + eta * rng.mixed_state(n, n);
    const DensityMatrix rho(noisy, {n});
    const MembershipResult m = is_equilibrium_member(rho, x, 1e-6);
    if (m.member) {
      const auto p = outcome_distribution(rho, x).probabilities;
      const DensityMatrix sigma(block_uniform_state(x, p), {n});
      const double lambda_min = sigma.spectrum().values(0);
      const double bound = static_cast<double>(n * n) * m.residual * m.residual / lambda_min;
      const double gap = obs_entropy(rho, x) - vn_entropy(rho);
      margin = std::min(margin, bound + 1e-12 - std::abs(gap));
    } else {
      margin = std::min(margin, -1.0);  // a 1e-8 perturbation must stay inside tol 1e-6
    }
    t.record(margin);
  }
  return t;
}

/// For ρ₀ in the equilibrium set of X₀, any U and any X_t:
/// S_obs(Uρ₀U†, X_t) >= S_obs(ρ₀, X₀) - 1e-9.
inline PropertyTally check_unitary_growth(Rng& rng, int count) {
  PropertyTally t;
  for (int i = 0; i < count; ++i) {
    const Index n = rng.integer(4, 64);
    const CoarseGraining x0 = rng.graining(n);
    const DensityMatrix rho0 = random_member(rng, x0);
    if (!is_equilibrium_member(rho0, x0, 1e-8).member) {
      t.record(-1.0);
      continue;
    }
    const CoarseGraining xt = rng.graining(n);
    const DensityMatrix rhot = evolve(rho0, rng.unitary(n));
    t.record(obs_entropy(rhot, xt) - obs_entropy(rho0, x0) + 1e-9);
  }
  return t;
}

}  // namespace testing
