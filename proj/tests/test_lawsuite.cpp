#include <doctest.h>

#include <numbers>

#include "obsent/lawsuite.hpp"
#include "support.hpp"

using namespace obsent;
using doctest::Approx;

namespace {

ModelSpec star(int sites, double g) {
  ModelSpec s;
  s.bath_sites = {sites};
  s.coupling = {g};
  return s;
}

RunSettings settings(double t_max, std::size_t steps, double delta = 0.25) {
  RunSettings r;
  r.t_max = t_max;
  r.steps = steps;
  r.delta = delta;
  return r;
}

ComplexMatrix excited() {
  ComplexMatrix r = ComplexMatrix::Zero(2, 2);
  r(1, 1) = 1.0;
  return r;
}

ComplexMatrix populations(std::initializer_list<double> p) { return testing::real_diag(p); }

bool names(const std::vector<Violation>& v, const std::string& invariant) {
  for (const auto& x : v)
    if (x.invariant == invariant) return true;
  return false;
}

void report(const std::vector<Violation>& v) {
  for (const auto& x : v) MESSAGE(x.invariant << " at t = " << x.time << ": " << x.value << " vs " << x.bound);
}

}  // namespace

TEST_CASE("isolated: undriven Gibbs and window-uniform starts do not produce entropy") {
  ModelSpec s = star(4, 0.2);
  s.driving.kind = DriveKind::None;
  const BuiltModel m = build(s);
  const RunSettings r = settings(10.0, 40);
  const HermitianOperator h = m.total_hamiltonian(0.0);
  for (const DensityMatrix& rho0 : {gibbs_state(h, 1.0, m.dims()), coarse_gibbs_state(h, 1.0, r.delta)}) {
    const ThermoLedger L = run_isolated(m, r, rho0);
    REQUIRE(L.sigma.size() == 41);
    for (std::size_t k = 0; k < L.sigma.size(); ++k) {
      CHECK(std::abs(L.sigma[k]) <= 1e-9);
      CHECK(std::abs(L.U_total[k] - L.U_total[0]) <= 1e-9);
      CHECK(L.energy[k].W == 0.0);
    }
  }
}

TEST_CASE("isolated: driven ramp from Gibbs obeys Clausius >= Sigma >= 0 and the first law") {
  ModelSpec s = star(4, 0.2);
  s.driving.ramp_time = 5.0;
  const BuiltModel m = build(s);
  // windows narrow enough to resolve every level, so the Gibbs state is a member
  const RunSettings r = settings(5.0, 50, 1e-6);
  const ThermoLedger L = run_isolated(m, r, gibbs_state(m.total_hamiltonian(0.0), 1.0, m.dims()));
  CHECK(L.initial_state_ok);
  CHECK(L.r_delta <= 1e-12);
  const auto v = check_hierarchy(L);
  report(v);
  CHECK(v.empty());
  for (std::size_t k = 0; k < L.time.size(); ++k) {
    CHECK(L.sigma[k] >= -L.slack);
    CHECK(L.clausius_isolated[k] >= L.sigma[k] - L.slack - L.quadrature_tolerance);
  }
  CHECK(L.sigma.back() > 1e-3);  // the ramp really does something
  CHECK(max_first_law_residual(L) <= L.quadrature_tolerance);
  CHECK(L.quadrature_tolerance == Approx(r.quadrature_constant * L.dt * L.dt));
}

TEST_CASE("isolated: coarse windows assert Sigma >= 0 and only report Clausius") {
  ModelSpec s = star(4, 0.2);
  s.driving.ramp_time = 5.0;
  const BuiltModel m = build(s);
  const RunSettings r = settings(5.0, 50);
  const ThermoLedger L = run_isolated(m, r, coarse_gibbs_state(m.total_hamiltonian(0.0), 1.0, r.delta));
  CHECK(L.initial_state_ok);
  CHECK(L.r_delta > 1e-6);
  CHECK(!L.warnings.empty());
  const auto v = check_hierarchy(L);
  report(v);
  CHECK(v.empty());
  for (std::size_t k = 0; k < L.time.size(); ++k) CHECK(L.sigma[k] >= -L.slack);
  // the Clausius integral still closes against its endpoint form
  CHECK(clausius_closure_residual(L) <= L.quadrature_tolerance);
}

TEST_CASE("isolated: a non-Gibbs member start keeps the initial Clausius term") {
  ModelSpec s = star(4, 0.2);
  s.driving.ramp_time = 5.0;
  const BuiltModel m = build(s);
  const RunSettings r = settings(5.0, 50, 1e-6);
  const HermitianOperator h = m.total_hamiltonian(0.0);
  // diagonal in the energy basis but hotter at the top than any Gibbs state
  RealVector p = gibbs_populations(h.spectrum().values, 1.0);
  std::swap(p(0), p(p.size() - 1));
  const ComplexMatrix& v = h.spectrum().vectors;
  const DensityMatrix rho0(v * p.cast<Complex>().asDiagonal() * v.adjoint(), m.dims());
  const ThermoLedger L = run_isolated(m, r, rho0);
  CHECK(L.initial_state_ok);
  const double start = L.S_eq[0] - L.S_obs[0];
  CHECK(start > 0.0);
  CHECK(check_hierarchy(L).empty());
  for (std::size_t k = 0; k < L.time.size(); ++k) {
    CHECK(L.clausius_isolated[k] + start >= L.sigma[k] - L.slack - L.quadrature_tolerance);
  }
}

TEST_CASE("isolated: a Gibbs state with coarse windows is flagged, not asserted") {
  const BuiltModel m = build(star(4, 0.2));
  const RunSettings r = settings(2.0, 10, 0.5);
  const ThermoLedger L = run_isolated(m, r, gibbs_state(m.total_hamiltonian(0.0), 1.0, m.dims()));
  CHECK(!L.initial_state_ok);
  CHECK(L.initial_state_residual > 1e-8);
  CHECK(!L.warnings.empty());
}

TEST_CASE("open: decoupled and undriven means no heat and no entropy production") {
  ModelSpec s = star(4, 0.0);
  s.driving.kind = DriveKind::None;
  const ThermoLedger L = run_open(build(s), settings(5.0, 25), populations({0.3, 0.7}));
  for (std::size_t k = 0; k < L.time.size(); ++k) {
    CHECK(std::abs(L.energy[k].Q[0]) <= 1e-12);
    CHECK(std::abs(L.hierarchy.points[k].sigma_a) <= 1e-9);
  }
}

TEST_CASE("open: decoupled but driven system keeps Sigma_a at zero") {
  ModelSpec s = star(4, 0.0);
  s.driving.kind = DriveKind::Periodic;
  const ThermoLedger L = run_open(build(s), settings(5.0, 25), populations({0.3, 0.7}));
  for (const auto& p : L.hierarchy.points) CHECK(std::abs(p.sigma_a) <= 1e-9);
  CHECK(std::abs(L.energy.back().W) > 1e-3);
}

TEST_CASE("open: weak coupling hierarchy, gap identities and first law") {
  const BuiltModel m = build(star(5, 0.1));
  const RunSettings r = settings(6.0, 60);
  const ThermoLedger L = run_open(m, r, excited());
  const auto v = check_hierarchy(L);
  report(v);
  CHECK(v.empty());
  CHECK(L.slack == Approx(std::max(1e-9, 2 * L.r_delta)));

  const HermitianOperator& hb = m.bath_hamiltonian(0);
  const DensityMatrix pi0 = gibbs_state(hb, r.betas[0]);
  const double quad = L.quadrature_tolerance;
  for (std::size_t k = 0; k < L.time.size(); ++k) {
    const auto& h = L.hierarchy.points[k];
    CHECK(h.sigma_a >= -L.slack);
    CHECK(h.sigma_a <= h.sigma_b + 1e-8);
    CHECK(h.sigma_b <= h.sigma_c + quad + L.slack);
    CHECK(h.sigma_c <= h.sigma_d_tilde + quad + L.slack);
    CHECK(std::abs(h.sigma_b - h.sigma_a - h.gap_ab) <= 1e-8);
    CHECK(h.sigma_c - h.sigma_b >= -(2 * L.r_delta + quad));
    CHECK(h.I_obs <= h.I_quantum + 1e-9);
    CHECK(h.I_quantum <= 2 * std::numbers::ln2 + 1e-9);

    // the relative-entropy gap against an independent quantum oracle
    const double d = relative_entropy(gibbs_state(hb, L.energy[k].beta_star[0]), pi0);
    CHECK(std::abs(h.gap_cd_tilde - d) <= 1e-9);
    CHECK(std::abs(h.sigma_d_tilde - h.sigma_c - d) <= quad + 2 * L.r_delta);
  }
  CHECK(max_first_law_residual(L) <= L.quadrature_tolerance);
  CHECK(L.hierarchy.points.back().sigma_a > 1e-4);
}

TEST_CASE("open: closure residual is second order in the step") {
  const BuiltModel m = build(star(4, 0.15));
  const double r1 = clausius_closure_residual(run_open(m, settings(5.0, 25), excited()));
  const double r2 = clausius_closure_residual(run_open(m, settings(5.0, 50), excited()));
  MESSAGE("closure residual 25 steps " << r1 << ", 50 steps " << r2);
  CHECK(r1 / r2 >= 3.0);
}

TEST_CASE("open: fixed-basis initial state must be diagonal") {
  const BuiltModel m = build(star(3, 0.1));
  RunSettings r = settings(1.0, 5);
  r.system_basis = SystemBasisMode::Fixed;
  ComplexMatrix plus = ComplexMatrix::Constant(2, 2, 0.5);
  CHECK(testing::error_code_of([&] { run_open(m, r, plus); }) == ErrorCode::InvalidInitialState);
  r.initial_check = InitialCheck::Flag;
  const ThermoLedger L = run_open(m, r, plus);
  CHECK(!L.initial_state_ok);
  CHECK(L.initial_state_residual == Approx(0.5));
  // the eigenbasis mode accepts any state
  r.system_basis = SystemBasisMode::Eigenbasis;
  CHECK(run_open(m, r, plus).initial_state_ok);
}

TEST_CASE("open: argument errors") {
  const BuiltModel m = build(star(3, 0.1));
  RunSettings r = settings(1.0, 5);
  CHECK(testing::error_code_of([&] { run_open(m, r, ComplexMatrix::Identity(3, 3) / 3.0); }) ==
        ErrorCode::DimensionMismatch);
  r.betas = {1.0, 2.0};
  CHECK(testing::error_code_of([&] { run_open(m, r, excited()); }) == ErrorCode::LengthMismatch);
  ModelSpec two;
  two.kind = ModelKind::SpinChainTwoBath;
  two.bath_sites = {2, 2};
  two.coupling = {0.1, 0.1};
  CHECK(testing::error_code_of([&] { run_open(build(two), settings(1.0, 5), excited()); }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("open: weak-perturbation scaling across a coupling sweep") {
  double last_eps = 0.0;
  for (double g : {0.05, 0.1, 0.2}) {
    const ThermoLedger L = run_open(build(star(5, g)), settings(6.0, 60), excited());
    double eps = 0.0, ratio = 0.0;
    for (std::size_t k = 0; k < L.time.size(); ++k) {
      const double e = L.energy[k].epsilon_hat;
      eps = std::max(eps, e);
      const auto& h = L.hierarchy.points[k];
      if (e > 0) ratio = std::max(ratio, std::abs(h.sigma_d - h.sigma_c) / (e * e + e * std::abs(L.energy[k].Q[0])));
    }
    MESSAGE("g = " << g << ": max eps_hat " << eps << ", max |Sd - Sc| / (eps^2 + eps |Q|) " << ratio);
    CHECK(eps > last_eps);
    CHECK(ratio <= 0.2);
    last_eps = eps;
  }
}

TEST_CASE("open: bath entropy change is beta0 dU_B up to second order") {
  // identical uncoupled bath spins: every window is one exact level, so the
  // binned and exact pictures agree and ΔS = β₀ΔU_B - D(p || p₀) with
  // 0 <= D <= χ² <= ε̂².
  for (double g : {0.05, 0.2}) {
    ModelSpec s = star(5, g);
    s.bath_coupling = 0.0;
    s.omegas = std::vector<double>(5, 1.0);
    const RunSettings r = settings(6.0, 60);
    const ThermoLedger L = run_open(build(s), r, excited());
    CHECK(L.r_delta <= 1e-12);
    for (std::size_t k = 0; k < L.time.size(); ++k) {
      const double e = L.energy[k].epsilon_hat;
      const double d = (L.S_bath[0][k] - L.S_bath[0][0]) - r.betas[0] * (L.energy[k].U_B[0] - L.energy[0].U_B[0]);
      CHECK(d <= 1e-10);
      CHECK(d >= -e * e - 1e-10);
    }
  }
}

TEST_CASE("generalized: product joint agrees with the product run") {
  const BuiltModel m = build(star(4, 0.1));
  const RunSettings r = settings(4.0, 40);
  const std::vector<double> ps{0.2, 0.8};
  const ThermoLedger a = run_open(m, r, populations({0.2, 0.8}));
  const ThermoLedger b = run_open_generalized(m, r, product_initial_joint(m, r, ps));
  CHECK(check_hierarchy(b).empty());
  const double tol = 2 * a.r_delta + 1e-9;
  MESSAGE("r_delta " << a.r_delta);
  for (std::size_t k = 0; k < a.time.size(); ++k) {
    const auto& x = a.hierarchy.points[k];
    const auto& y = b.hierarchy.points[k];
    CHECK(std::abs(x.sigma_a - y.sigma_a) <= tol);
    CHECK(std::abs(x.sigma_b - y.sigma_b) <= tol);
    CHECK(std::abs(x.sigma_c - y.sigma_c) <= tol);
    CHECK(std::abs(x.sigma_d - y.sigma_d) <= tol);
  }
}

TEST_CASE("generalized: correlated start, no coupling") {
  ModelSpec s = star(4, 0.0);
  const BuiltModel m = build(s);
  const RunSettings r = settings(4.0, 20, 0.5);
  const CoarseGraining x = open_initial_graining(m, r);
  // system excited only together with the higher bath windows; the system
  // marginal is non-degenerate so its eigenbasis is unique
  std::vector<double> p(x.size(), 0.0);
  const std::size_t half = x.size() / 2;
  p[0] = 0.5;
  p[1] = 0.1;
  p[half + 2] = 0.25;
  p[half + 3] = 0.15;
  OutcomeDistribution joint{p, x.volumes(), {}};
  for (std::size_t k = 0; k < x.size(); ++k) joint.labels.push_back(x.label(k));
  const ThermoLedger L = run_open_generalized(m, r, joint);
  CHECK(check_hierarchy(L).empty());
  for (std::size_t k = 0; k < L.time.size(); ++k) {
    CHECK(std::abs(L.hierarchy.points[k].sigma_a) <= 1e-9);
    CHECK(std::abs(L.decomposition[k].line3 - L.decomposition[0].line3) <= 1e-9);
  }
  CHECK(L.hierarchy.points[0].I_obs > 0.1);

  joint.probabilities[0] = 0.9;
  CHECK(testing::error_code_of([&] { run_open_generalized(m, r, joint); }) == ErrorCode::NotNormalized);
}

TEST_CASE("generalized: correlated start, coupled, decomposition sums to Sigma_a") {
  const BuiltModel m = build(star(4, 0.2));
  const RunSettings r = settings(4.0, 40);
  const CoarseGraining x = open_initial_graining(m, r);
  testing::Rng rng(80);
  auto p = rng.probabilities(x.size());
  OutcomeDistribution joint{p, x.volumes(), {}};
  const ThermoLedger L = run_open_generalized(m, r, joint);
  for (std::size_t k = 0; k < L.time.size(); ++k) {
    const auto& d = L.decomposition[k];
    CHECK(std::abs(d.line1 + d.line2 + d.line3 - L.hierarchy.points[k].sigma_a) <= L.quadrature_tolerance);
  }
  const auto v = check_hierarchy(L);
  report(v);
  CHECK(v.empty());
}

TEST_CASE("multibath: mirror-symmetric chain carries no net current") {
  ModelSpec s;
  s.kind = ModelKind::SpinChainTwoBath;
  s.bath_sites = {3, 3};
  s.coupling = {0.1, 0.1};
  s.omegas = {1.3, 0.7, 1.1, 1.1, 0.7, 1.3};
  s.driving.kind = DriveKind::None;
  RunSettings r = settings(10.0, 50);
  r.betas = {1.0, 1.0};
  const ThermoLedger L = run_multibath(build(s), r, populations({0.5, 0.5}));
  double net = 0.0, gross = 0.0;
  for (const auto& e : L.energy) {
    net += 0.5 * (e.Q[0] - e.Q[1]);
    gross += std::abs(e.Q[0]) + std::abs(e.Q[1]);
  }
  CHECK(gross > 0.0);
  CHECK(std::abs(net) <= 0.05 * gross);
  CHECK(check_hierarchy(L).empty());
}

TEST_CASE("multibath: a decoupled bath exchanges no heat") {
  ModelSpec s;
  s.kind = ModelKind::SpinChainTwoBath;
  s.bath_sites = {3, 3};
  s.coupling = {0.2, 0.0};
  RunSettings r = settings(5.0, 25);
  r.betas = {0.5, 1.5};
  const ThermoLedger L = run_multibath(build(s), r, excited());
  for (const auto& e : L.energy) CHECK(std::abs(e.Q[1]) <= 1e-12);
  CHECK(std::abs(L.energy.back().Q[0]) > 1e-4);
}

TEST_CASE("multibath: unequal temperatures") {
  ModelSpec s;
  s.kind = ModelKind::SpinChainTwoBath;
  s.bath_sites = {3, 3};
  s.coupling = {0.1, 0.1};
  RunSettings r = settings(4.0, 40);
  r.betas = {0.5, 1.5};
  const ThermoLedger L = run_multibath(build(s), r, populations({0.5, 0.5}));
  const auto v = check_hierarchy(L);
  report(v);
  CHECK(v.empty());
  for (const auto& p : L.hierarchy.points) {
    CHECK(p.sigma_d >= -L.slack);
    CHECK(std::abs(p.sigma_b - p.sigma_a - p.gap_ab) <= 1e-8);
  }
  CHECK(max_first_law_residual(L) <= L.quadrature_tolerance);
}

namespace {

ModelSpec particle_model(double g1, double g2) {
  ModelSpec s;
  s.kind = ModelKind::HoppingParticle;
  s.system_sites = 2;
  s.bath_sites = {2, 2};
  s.coupling = {g1, g2};
  s.omegas = {1.0, 1.2, 1.0, 1.2};
  s.driving.kind = DriveKind::None;
  return s;
}

ComplexMatrix empty_system() {
  ComplexMatrix r = ComplexMatrix::Zero(4, 4);
  r(0, 0) = 1.0;
  return r;
}

}  // namespace

TEST_CASE("particle: symmetric reservoirs carry no net particle current") {
  RunSettings r = settings(10.0, 50);
  r.betas = {1.0, 1.0};
  r.mus = {0.5, 0.5};
  const ThermoLedger L = run_particle(build(particle_model(0.3, 0.3)), r, empty_system());
  double net = 0.0, gross = 0.0;
  for (std::size_t k = 0; k < L.time.size(); ++k) {
    const double d1 = L.N_bath[0][k] - L.N_bath[0][0], d2 = L.N_bath[1][k] - L.N_bath[1][0];
    net += 0.5 * (d1 - d2);
    gross += std::abs(d1) + std::abs(d2);
  }
  CHECK(gross > 0.0);
  CHECK(std::abs(net) <= 0.05 * gross);
  CHECK(!L.grand_unsolved);
}

TEST_CASE("particle: biased chemical potentials drive particles from 1 to 2") {
  RunSettings r = settings(10.0, 50);
  r.betas = {1.0, 1.0};
  r.mus = {1.0, 0.0};
  const ThermoLedger L = run_particle(build(particle_model(0.3, 0.3)), r, empty_system());
  double d1 = 0.0, d2 = 0.0;
  for (std::size_t k = 0; k < L.time.size(); ++k) {
    d1 += L.N_bath[0][k] - L.N_bath[0][0];
    d2 += L.N_bath[1][k] - L.N_bath[1][0];
  }
  CHECK(d1 < 0.0);
  CHECK(d2 > 0.0);
  const auto v = check_hierarchy(L);
  report(v);
  CHECK(v.empty());
  CHECK(max_first_law_residual(L) <= L.quadrature_tolerance);
  REQUIRE(L.energy.back().mu_star.has_value());
}

TEST_CASE("particle: decoupled bath keeps its particles") {
  RunSettings r = settings(5.0, 25);
  r.betas = {1.0, 2.0};
  r.mus = {0.5, -0.5};
  const ThermoLedger L = run_particle(build(particle_model(0.3, 0.0)), r, empty_system());
  for (double n : L.N_bath[1]) CHECK(std::abs(n - L.N_bath[1][0]) <= 1e-12);
}

TEST_CASE("particle: driven run closes the first law with chemical work") {
  ModelSpec s = particle_model(0.3, 0.3);
  s.driving.kind = DriveKind::Periodic;
  RunSettings r = settings(5.0, 50);
  r.betas = {1.0, 0.7};
  r.mus = {0.5, -0.5};
  const ThermoLedger L = run_particle(build(s), r, empty_system());
  CHECK(max_first_law_residual(L) <= L.quadrature_tolerance);
  CHECK(std::abs(L.energy.back().W_chem) > 1e-6);
}

TEST_CASE("particle: models without a conserved number are rejected") {
  RunSettings r = settings(1.0, 5);
  r.betas = {1.0};
  r.mus = {0.0};
  CHECK(testing::error_code_of([&] { run_particle(build(star(3, 0.1)), r, excited()); }) ==
        ErrorCode::NonConserving);

  ModelSpec c;
  c.kind = ModelKind::Custom;
  CustomModel cm;
  cm.system_static = 0.5 * sigma_x();
  cm.system_drive = 0.5 * sigma_z();
  cm.bath_hamiltonians = {sigma_x()};
  cm.bath_numbers = {testing::real_diag({0, 1})};  // does not commute with σ_x
  cm.couplings = {ComplexMatrix::Zero(4, 4)};
  c.custom = cm;
  CHECK(testing::error_code_of([&] { run_particle(build(c), r, excited()); }) == ErrorCode::NonCommuting);
}

TEST_CASE("conjecture_report") {
  ModelSpec s = star(4, 0.0);
  s.driving.kind = DriveKind::Periodic;
  const ConjectureReport zero = conjecture_report(run_open(build(s), settings(5.0, 20), excited()));
  CHECK(zero.rows.size() == 21);
  for (const auto& row : zero.rows) {
    CHECK(row.line2_abs <= 1e-12);
    CHECK(row.line3_abs <= 1e-12);
  }
  CHECK(zero.table().find("line1") != std::string::npos);

  const ConjectureReport driven = conjecture_report(run_open(build(star(4, 0.2)), settings(10.0, 40), excited()));
  CHECK(std::isfinite(driven.line1_rate));
  CHECK(std::isfinite(driven.line3_plateau));
  MESSAGE(driven.table());
}

TEST_CASE("check_hierarchy names the violated invariant") {
  ThermoLedger L = run_open(build(star(3, 0.1)), settings(2.0, 10), excited());
  REQUIRE(check_hierarchy(L).empty());
  ThermoLedger bad = L;
  bad.hierarchy.points[4].sigma_a = -0.5;
  CHECK(names(check_hierarchy(bad), "sigma_a_nonnegative"));
  bad = L;
  bad.hierarchy.points[3].gap_ab += 1e-6;
  CHECK(names(check_hierarchy(bad), "gap_ab_identity"));
  bad = L;
  bad.first_law_residual[5] = 1.0;
  CHECK(names(check_hierarchy(bad), "first_law"));
  bad = L;
  bad.hierarchy.points[6].sigma_c = bad.hierarchy.points[6].sigma_d_tilde + 1.0;
  CHECK(names(check_hierarchy(bad), "sigma_c_le_sigma_d_tilde"));
}
