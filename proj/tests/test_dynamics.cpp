#include <doctest.h>

#include "obsent/dynamics.hpp"
#include "obsent/models.hpp"
#include "support.hpp"

using namespace obsent;
using testing::max_diff;

namespace {

// Three segments of a driven complex Hamiltonian.
Protocol three_segment(testing::Rng& rng, Index n) {
  const ComplexMatrix base = rng.hermitian(n), drive = rng.hermitian(n);
  std::vector<HermitianOperator> seg;
  for (double lambda : {0.0, 0.6, 1.4}) seg.emplace_back(ComplexMatrix(base + lambda * drive));
  return Protocol::piecewise(std::move(seg), 2.1);
}

}  // namespace

TEST_CASE("trotter_propagator") {
  testing::Rng rng(60);
  const HermitianOperator h(rng.hermitian(5));
  const ComplexMatrix exact = propagator_step(h, 3.0);
  for (std::size_t n : {1u, 7u, 40u}) {
    const Protocol p(3.0, n, 5, [h](std::size_t) { return h; });
    const Propagator u = trotter_propagator(p);
    CHECK(max_diff(u.matrix, exact) <= 1e-10);
    CHECK(u.step_count == n);
    CHECK(u.t1 == 3.0);
  }
  CHECK(max_diff(trotter_propagator(Protocol::constant(h, 0.0)).matrix, ComplexMatrix::Identity(5, 5)) < 1e-15);

  const HermitianOperator h1(rng.hermitian(4)), h2(rng.hermitian(4));
  const Propagator q = trotter_propagator(Protocol::piecewise({h1, h2}, 1.0));
  CHECK(max_diff(q.matrix, propagator_step(h2, 0.5) * propagator_step(h1, 0.5)) <= 1e-12);

  const Protocol bad(1.0, 2, 4, [&](std::size_t k) { return k == 0 ? h1 : h; });
  CHECK(testing::error_code_of([&] { trotter_propagator(bad); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("evolve") {
  testing::Rng rng(61);
  const DensityMatrix rho = rng.density(6);
  CHECK(max_diff(evolve(rho, ComplexMatrix::Identity(6, 6)).matrix(), rho.matrix()) <= 1e-15);
  const ComplexMatrix u = rng.unitary(6);
  const DensityMatrix mixed = DensityMatrix::maximally_mixed({6});
  CHECK(max_diff(evolve(mixed, u).matrix(), mixed.matrix()) < 1e-15);
  const DensityMatrix out = evolve(rho, u);
  CHECK(std::abs(out.matrix().trace() - 1.0) <= 1e-10);
  CHECK((out.spectrum().values - rho.spectrum().values).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(std::abs(vn_entropy(out) - vn_entropy(rho)) <= 1e-10);
  CHECK(testing::error_code_of([&] { evolve(rho, rng.unitary(3)); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("time_reverse_state") {
  testing::Rng rng(62);
  const ComplexMatrix real = rng.mixed_state(4).real().cast<Complex>();
  const DensityMatrix r(real / real.trace().real(), {4});
  CHECK(max_diff(time_reverse_state(r).matrix(), r.matrix()) <= 1e-15);

  const DensityMatrix rho = rng.density(5);
  CHECK(max_diff(time_reverse_state(time_reverse_state(rho)).matrix(), rho.matrix()) <= 1e-15);

  // tr{Θ O Θ⁻¹} = tr{O}*
  const ComplexMatrix o = rng.gaussian(5, 5);
  CHECK(std::abs(o.conjugate().trace() - std::conj(o.trace())) < 1e-14);

  // anti-unitarity keeps overlaps up to conjugation
  for (int trial = 0; trial < 10; ++trial) {
    const ComplexVector psi = rng.vector(7), phi = rng.vector(7);
    CHECK(std::abs(std::abs(psi.conjugate().dot(phi.conjugate())) - std::abs(psi.dot(phi))) <= 1e-12);
  }
}

TEST_CASE("reversed_protocol") {
  testing::Rng rng(63);
  const HermitianOperator real(ComplexMatrix(rng.hermitian(4).real().cast<Complex>()));
  const Protocol c = Protocol::constant(real, 2.0, 5);
  const Protocol rc = reversed_protocol(c);
  CHECK(max_diff(rc.hamiltonian_at(3).matrix(), real.matrix()) == 0.0);

  const Protocol p = three_segment(rng, 4);
  const Protocol r = reversed_protocol(p);
  const Protocol rr = reversed_protocol(r);
  for (std::size_t k = 0; k < p.steps(); ++k) {
    CHECK(max_diff(r.hamiltonian_at(k).matrix(), p.hamiltonian_at(p.steps() - 1 - k).matrix().conjugate()) == 0.0);
    CHECK(max_diff(rr.hamiltonian_at(k).matrix(), p.hamiltonian_at(k).matrix()) == 0.0);
  }
  CHECK(r.duration() == p.duration());
}

TEST_CASE("reversing a flux model flips the flux") {
  ModelSpec spec;
  spec.kind = ModelKind::HoppingParticle;
  spec.system_sites = 2;
  spec.bath_sites = {3};
  spec.coupling = {0.2};
  spec.flux = 0.7;
  spec.driving.kind = DriveKind::Periodic;
  const BuiltModel plus = build(spec);
  spec.flux = -0.7;
  const BuiltModel minus = build(spec);
  const Protocol p = plus.protocol(4.0, 6);
  const Protocol q = minus.protocol(4.0, 6);
  const Protocol r = reversed_protocol(p);
  CHECK(max_abs(p.hamiltonian_at(0).matrix().imag()) > 0.01);  // really complex
  for (std::size_t k = 0; k < 6; ++k) CHECK(max_diff(r.hamiltonian_at(k).matrix(), q.hamiltonian_at(5 - k).matrix()) <= 1e-15);
}

TEST_CASE("time-reversed propagator identities") {
  testing::Rng rng(64);
  const Protocol p = three_segment(rng, 6);
  const ComplexMatrix u = trotter_propagator(p).matrix;
  const ComplexMatrix u_theta = trotter_propagator(reversed_protocol(p)).matrix;
  // Θ⁻¹ U_Θ Θ = U†, and equivalently U_Θ = Θ U† Θ⁻¹ = conj(U†)
  CHECK(max_diff(u_theta.conjugate(), u.adjoint()) <= 1e-9);
  CHECK(max_diff(u_theta, u.adjoint().conjugate()) <= 1e-9);
}

TEST_CASE("recovery_check") {
  testing::Rng rng(65);
  const HermitianOperator h(rng.hermitian(5));
  CHECK(recovery_check(rng.density(5), Protocol::constant(h, 4.0, 3)) <= 1e-9);
  for (int trial = 0; trial < 5; ++trial) CHECK(recovery_check(rng.density(6), three_segment(rng, 6)) <= 1e-8);

  // real block-uniform states are fixed points of Θ
  const ComplexMatrix frame = rng.unitary(8).real().householderQr().householderQ() * Eigen::MatrixXd::Identity(8, 8);
  const CoarseGraining x = rng.graining(frame, 3);
  const DensityMatrix member(block_uniform_state(x, rng.probabilities(x.size())), {8});
  CHECK(is_equilibrium_member(member, x, 1e-10).member);
  CHECK(max_diff(time_reverse_state(member).matrix(), member.matrix()) <= 1e-10);
}
