#pragma once

// Piecewise-constant protocols, exact per-step propagators, and time reversal
// (Θ = complex conjugation in the computational basis).

#include <cstddef>
#include <functional>
#include <memory>
#include <string>

#include "obsent/linalg.hpp"

namespace obsent {

class Protocol {
 public:
  /// Hamiltonian of segment k, for k in [0, steps).
  using Generator = std::function<HermitianOperator(std::size_t)>;

  Protocol(double duration, std::size_t steps, Index dim, Generator segment, std::string description = {});

  /// A single time-independent H. trotter_propagator uses one exponential.
  static Protocol constant(const HermitianOperator& h, double duration, std::size_t steps = 1);
  static Protocol piecewise(std::vector<HermitianOperator> segments, double duration);

  double duration() const noexcept { return duration_; }
  std::size_t steps() const noexcept { return steps_; }
  double dt() const noexcept { return duration_ / static_cast<double>(steps_); }
  Index dim() const noexcept { return dim_; }
  const std::string& description() const noexcept { return description_; }
  bool is_constant() const noexcept { return constant_ != nullptr; }

  /// Segments are generated on demand; the dimension is checked on every call.
  HermitianOperator hamiltonian_at(std::size_t k) const;

  /// e^{-i H_k dt}.
  ComplexMatrix step_propagator(std::size_t k) const;

 private:
  double duration_;
  std::size_t steps_;
  Index dim_;
  Generator segment_;
  std::string description_;
  std::shared_ptr<const HermitianOperator> constant_;
};

struct Propagator {
  ComplexMatrix matrix;
  double t0 = 0.0;
  double t1 = 0.0;
  std::size_t step_count = 0;
};

/// U = e^{-iH_{N-1}dt} ... e^{-iH_0 dt}.
Propagator trotter_propagator(const Protocol& p);

/// U ρ U†.
DensityMatrix evolve(const DensityMatrix& rho, const Propagator& u);
DensityMatrix evolve(const DensityMatrix& rho, const ComplexMatrix& u);

/// Θ ρ Θ⁻¹, the entrywise conjugate.
DensityMatrix time_reverse_state(const DensityMatrix& rho);

/// Step k of the result is conj(H_{N-1-k}).
Protocol reversed_protocol(const Protocol& p);

/// max|ρ(0) - Θ⁻¹U_Θ Θ ρ(t) Θ⁻¹U_Θ† Θ| after a forward run of `p`.
double recovery_check(const DensityMatrix& rho0, const Protocol& p);

}  // namespace obsent
