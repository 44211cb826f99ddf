#pragma once

// Desk-scale system + bath Hamiltonians and their driving protocols.
//
// Factor order is always (system, bath 1, bath 2, ...). Only the system
// Hamiltonian depends on time: H_S(t) = H_S0 + ε(t) D_S.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "obsent/dynamics.hpp"
#include "obsent/linalg.hpp"

namespace obsent {

enum class ModelKind { SpinStar, SpinChainTwoBath, HoppingParticle, Custom };
enum class DriveKind { None, Ramp, Periodic, Quench };

std::string to_string(ModelKind kind);
std::string to_string(DriveKind kind);
ModelKind model_kind_from_string(const std::string& s);
DriveKind drive_kind_from_string(const std::string& s);

struct DrivingSpec {
  DriveKind kind = DriveKind::Ramp;
  double start = 1.0;        // ε before driving
  double end = 2.0;          // ramp target or post-quench value
  double ramp_time = 10.0;   // ε holds `end` afterwards
  double amplitude = 0.5;    // periodic
  double period = 5.0;       // periodic
  double quench_time = 0.0;  // quench happens at this time (grid-aligned)
};

/// Local operators for a user-supplied model.
struct CustomModel {
  ComplexMatrix system_static;
  ComplexMatrix system_drive;
  std::vector<ComplexMatrix> bath_hamiltonians;
  std::vector<ComplexMatrix> bath_numbers;  // empty or one per bath
  std::optional<ComplexMatrix> system_number;
  std::vector<ComplexMatrix> couplings;     // full-space V_ν, one per bath
};

struct ModelSpec {
  ModelKind kind = ModelKind::SpinStar;
  int system_sites = 1;             // hopping model only
  std::vector<int> bath_sites{8};   // one entry per bath
  double tunneling = 0.5;           // Δ in H_S
  std::vector<double> coupling{0.1};  // g per bath
  double bath_coupling = 0.1;       // J_B
  double hopping = 1.0;             // system hopping (particle model)
  double flux = 0.0;                // phase on bath hopping bonds
  std::vector<double> omegas;       // explicit ω_k (all baths concatenated); random when empty
  std::uint64_t seed = 7;
  DrivingSpec driving;
  std::optional<CustomModel> custom;
};

/// splitmix64; ω_k = 0.5 + u with u = (z >> 11) 2^-53.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();
  double uniform();  // [0, 1)

 private:
  std::uint64_t state_;
};

class BuiltModel {
 public:
  const ModelSpec& spec() const noexcept { return spec_; }
  const Dims& dims() const noexcept { return dims_; }
  Index dim() const noexcept { return total_dim(dims_); }
  std::size_t bath_count() const noexcept { return bath_h_.size(); }
  bool conserves_particles() const noexcept { return !bath_n_.empty(); }

  double epsilon(double t) const;
  double epsilon_rate(double t) const;
  /// Jump ε(t_q⁺) - ε(t_q⁻) for quench drives, 0 otherwise.
  double epsilon_jump() const;
  std::optional<double> quench_time() const;

  HermitianOperator system_hamiltonian(double t) const;       // local
  const ComplexMatrix& system_static() const noexcept { return system_static_; }
  const ComplexMatrix& system_drive() const noexcept { return system_drive_; }  // local D_S
  ComplexMatrix system_hamiltonian_full(double t) const;
  const ComplexMatrix& system_drive_full() const noexcept { return drive_full_; }

  const HermitianOperator& bath_hamiltonian(std::size_t nu) const { return bath_h_.at(nu); }
  const HermitianOperator& bath_number(std::size_t nu) const { return bath_n_.at(nu); }
  const std::optional<HermitianOperator>& system_number() const noexcept { return system_n_; }
  const ComplexMatrix& coupling(std::size_t nu) const { return coupling_.at(nu); }
  ComplexMatrix coupling_total() const;
  HermitianOperator total_number() const;

  HermitianOperator total_hamiltonian(double t) const;
  /// H with the drive parameter set to `eps` directly.
  HermitianOperator hamiltonian_for(double eps) const;

  /// Segment k uses H((k + 1/2) dt).
  Protocol protocol(double duration, std::size_t steps) const;

 private:
  friend BuiltModel build(const ModelSpec& spec);

  ModelSpec spec_;
  Dims dims_;
  ComplexMatrix system_static_;
  ComplexMatrix system_drive_;
  std::vector<HermitianOperator> bath_h_;
  std::vector<HermitianOperator> bath_n_;
  std::optional<HermitianOperator> system_n_;
  std::vector<ComplexMatrix> coupling_;
  ComplexMatrix static_full_;  // everything except ε(t) D_S
  ComplexMatrix drive_full_;
};

/// Throws SpecInvalid.
BuiltModel build(const ModelSpec& spec);

/// Site operators for a chain of spin-1/2 sites.
ComplexMatrix site_operator(const ComplexMatrix& local, int site, int sites);
/// Σ_i (1 - σ_z^{(i)})/2.
ComplexMatrix number_operator(int sites);

}  // namespace obsent
