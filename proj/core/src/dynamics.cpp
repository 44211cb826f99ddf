#include "obsent/dynamics.hpp"

#include <cmath>
#include <sstream>

#include "obsent/errors.hpp"

namespace obsent {

Protocol::Protocol(double duration, std::size_t steps, Index dim, Generator segment, std::string description)
    : duration_(duration), steps_(steps), dim_(dim), segment_(std::move(segment)),
      description_(std::move(description)) {
  if (steps_ < 1) throw Error(ErrorCode::InvalidArgument, "protocol needs at least one step");
  if (!(duration_ >= 0.0) || !std::isfinite(duration_)) {
    throw Error(ErrorCode::InvalidArgument, "protocol duration must be finite and non-negative");
  }
  if (dim_ < 1) throw Error(ErrorCode::DimensionMismatch, "protocol dimension must be positive");
  if (!segment_) throw Error(ErrorCode::InvalidArgument, "protocol without segment generator");
}

Protocol Protocol::constant(const HermitianOperator& h, double duration, std::size_t steps) {
  Protocol p(duration, steps, h.dim(), [h](std::size_t) { return h; }, "constant");
  p.constant_ = std::make_shared<const HermitianOperator>(h);
  return p;
}

Protocol Protocol::piecewise(std::vector<HermitianOperator> segments, double duration) {
  if (segments.empty()) throw Error(ErrorCode::InvalidArgument, "piecewise protocol without segments");
  const Index dim = segments.front().dim();
  const std::size_t n = segments.size();
  auto shared = std::make_shared<const std::vector<HermitianOperator>>(std::move(segments));
  return Protocol(duration, n, dim, [shared](std::size_t k) { return (*shared)[k]; }, "piecewise");
}

HermitianOperator Protocol::hamiltonian_at(std::size_t k) const {
  if (k >= steps_) throw Error(ErrorCode::InvalidArgument, "protocol step out of range");
  HermitianOperator h = constant_ ? *constant_ : segment_(k);
  if (h.dim() != dim_) {
    std::ostringstream os;
    os << "segment " << k << " has dimension " << h.dim() << ", protocol has " << dim_;
    throw Error(ErrorCode::DimensionMismatch, os.str());
  }
  return h;
}

ComplexMatrix Protocol::step_propagator(std::size_t k) const {
  return propagator_step(hamiltonian_at(k), dt());
}

Propagator trotter_propagator(const Protocol& p) {
  Propagator u;
  u.t1 = p.duration();
  u.step_count = p.steps();
  if (p.is_constant()) {
    u.matrix = propagator_step(p.hamiltonian_at(0), p.duration());
    return u;
  }
  u.matrix = ComplexMatrix::Identity(p.dim(), p.dim());
  for (std::size_t k = 0; k < p.steps(); ++k) u.matrix = p.step_propagator(k) * u.matrix;
  return u;
}

DensityMatrix evolve(const DensityMatrix& rho, const ComplexMatrix& u) {
  if (u.rows() != rho.dim() || u.cols() != rho.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "evolve: propagator and state dimensions differ");
  }
  return DensityMatrix::trusted(u * rho.matrix() * u.adjoint(), rho.dims());
}

DensityMatrix evolve(const DensityMatrix& rho, const Propagator& u) { return evolve(rho, u.matrix); }

DensityMatrix time_reverse_state(const DensityMatrix& rho) {
  return DensityMatrix::trusted(rho.matrix().conjugate(), rho.dims());
}

Protocol reversed_protocol(const Protocol& p) {
  const std::size_t n = p.steps();
  if (p.is_constant()) {
    Protocol r = Protocol::constant(HermitianOperator(p.hamiltonian_at(0).matrix().conjugate()), p.duration(), n);
    return r;
  }
  return Protocol(
      p.duration(), n, p.dim(),
      [p, n](std::size_t k) { return HermitianOperator(p.hamiltonian_at(n - 1 - k).matrix().conjugate()); },
      p.description().empty() ? "reversed" : "reversed " + p.description());
}

double recovery_check(const DensityMatrix& rho0, const Protocol& p) {
  const Propagator u = trotter_propagator(p);
  const DensityMatrix rho_t = evolve(rho0, u);
  const Propagator u_theta = trotter_propagator(reversed_protocol(p));
  // Θ⁻¹ U_Θ Θ acts as conj(U_Θ) on matrices.
  const ComplexMatrix back = u_theta.matrix.conjugate();
  const ComplexMatrix rebuilt = back * rho_t.matrix() * back.adjoint();
  return max_abs(rebuilt - rho0.matrix());
}

}  // namespace obsent
