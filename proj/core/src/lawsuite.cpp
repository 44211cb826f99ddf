#include "obsent/lawsuite.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "obsent/dynamics.hpp"
#include "obsent/entropy.hpp"
#include "obsent/errors.hpp"
#include "obsent/tolerances.hpp"

namespace obsent {

std::string to_string(RunKind kind) {
  switch (kind) {
    case RunKind::Isolated: return "isolated";
    case RunKind::Open: return "open";
    case RunKind::OpenGeneralized: return "open_generalized";
    case RunKind::Multibath: return "multibath";
    case RunKind::Particle: return "particle";
  }
  return "?";
}

namespace {

struct Bath {
  HermitianOperator h;
  std::optional<HermitianOperator> n;
  CoarseGraining graining;
  RealVector energies;   // eigenvalues (joint eigenbasis for particle baths)
  RealVector particles;  // empty unless particle bath
  ComplexMatrix vectors;
  double beta = 1.0;
  double mu = 0.0;
  OutcomeDistribution reference;  // tr{Π_E π_ν(β_ν)}
  double S_reference = 0.0;       // S_vN[π_ν(β_ν)]

  RealVector populations(double b, double alpha) const {
    return n ? grand_populations(energies, particles, b, alpha) : gibbs_populations(energies, b);
  }
  EquilibriumPoint point(double b, double alpha) const {
    return n ? grand_point(energies, particles, b, alpha) : gibbs_point(energies, b);
  }
  ComplexMatrix reference_state() const {
    const RealVector p = populations(beta, beta * mu);
    return vectors * p.cast<Complex>().asDiagonal() * vectors.adjoint();
  }
};

// Grid index of a quench, checked for alignment.
std::optional<std::size_t> quench_index(const BuiltModel& model, double dt, std::size_t steps) {
  const auto tq = model.quench_time();
  if (!tq) return std::nullopt;
  const double k = std::round(*tq / dt);
  if (std::abs(k * dt - *tq) > 1e-9 * dt || k < 0 || k >= static_cast<double>(steps)) {
    throw Error(ErrorCode::GridMismatch, "quench time must lie on the time grid inside the run");
  }
  return static_cast<std::size_t>(k);
}

// Drive parameter at grid point k; a quench at index kq switches after t_kq.
double epsilon_at(const BuiltModel& model, std::size_t k, double dt, std::optional<std::size_t> kq) {
  if (kq) return k <= *kq ? model.spec().driving.start : model.spec().driving.end;
  return model.epsilon(static_cast<double>(k) * dt);
}

// ∫ dε tr{D ρ} over one grid step: trapezoid in ε, exact when ε is linear on
// the step. A quench step jumps before the state moves.
double work_increment(double d_eps, double drive, double prev_drive, bool quench_step) {
  return quench_step ? d_eps * prev_drive : 0.5 * d_eps * (drive + prev_drive);
}

void require_settings(const RunSettings& s) {
  if (s.steps < 1) throw Error(ErrorCode::InvalidArgument, "steps must be at least 1");
  if (!(s.t_max > 0) || !std::isfinite(s.t_max)) throw Error(ErrorCode::InvalidArgument, "t_max must be positive");
  if (!(s.delta > 0) || !std::isfinite(s.delta)) throw Error(ErrorCode::InvalidArgument, "delta must be positive");
  for (double b : s.betas) {
    if (!std::isfinite(b)) throw Error(ErrorCode::InvalidArgument, "betas must be finite");
  }
}

std::vector<Bath> prepare_baths(const BuiltModel& model, const RunSettings& s, bool particles) {
  const std::size_t nb = model.bath_count();
  if (s.betas.size() != nb) {
    std::ostringstream os;
    os << "betas lists " << s.betas.size() << " values for " << nb << " bath(s)";
    throw Error(ErrorCode::LengthMismatch, os.str());
  }
  if (particles && s.mus.size() != nb) throw Error(ErrorCode::LengthMismatch, "mus needs one entry per bath");
  std::vector<Bath> baths;
  for (std::size_t nu = 0; nu < nb; ++nu) {
    const HermitianOperator& h = model.bath_hamiltonian(nu);
    if (particles) {
      const HermitianOperator& n = model.bath_number(nu);
      const JointSpectrum js = joint_spectrum(h, n);
      baths.push_back(Bath{h, n, energy_particle_graining(h, n, s.delta, s.anchor), js.energies, js.particles,
                           js.vectors, s.betas[nu], s.mus[nu], {}, 0.0});
    } else {
      const Spectrum& sp = h.spectrum();
      baths.push_back(Bath{h, std::nullopt, energy_graining(h, s.delta, s.anchor), sp.values, RealVector(),
                           sp.vectors, s.betas[nu], 0.0, {}, 0.0});
    }
    Bath& b = baths.back();
    const ComplexMatrix pi = b.reference_state();
    b.reference.probabilities = outcome_probabilities(pi, b.graining);
    b.reference.volumes = b.graining.volumes();
    for (std::size_t x = 0; x < b.graining.size(); ++x) b.reference.labels.push_back(b.graining.label(x));
    b.S_reference = b.point(b.beta, b.beta * b.mu).entropy;
  }
  return baths;
}

double delta_residual(const std::vector<Bath>& baths) {
  double r = 0.0;
  for (const auto& b : baths) {
    r += std::abs(b.S_reference - obs_entropy(b.reference.probabilities, b.reference.volumes));
  }
  return r;
}

ComplexMatrix fixed_system_basis(const RunSettings& s, Index ds) {
  if (!s.fixed_basis) return ComplexMatrix::Identity(ds, ds);
  const ComplexMatrix& w = *s.fixed_basis;
  if (w.rows() != ds || w.cols() != ds) throw Error(ErrorCode::DimensionMismatch, "fixed_basis has the wrong size");
  if (max_abs(w.adjoint() * w - ComplexMatrix::Identity(ds, ds)) > tol::kOrthonormal) {
    throw Error(ErrorCode::NotOrthonormal, "fixed_basis columns are not orthonormal");
  }
  return w;
}

// Conditional bath operator (⟨w| ⊗ 1) ρ (|w⟩ ⊗ 1).
ComplexMatrix conditional_bath(const ComplexMatrix& rho, const ComplexVector& w, Index db) {
  const Index ds = w.size();
  ComplexMatrix m = ComplexMatrix::Zero(db, db);
  for (Index i = 0; i < ds; ++i) {
    for (Index j = 0; j < ds; ++j) {
      const Complex c = std::conj(w(i)) * w(j);
      if (c != Complex(0.0)) m += c * rho.block(i * db, j * db, db, db);
    }
  }
  return m;
}

struct Snapshot {
  DensityMatrix rho_s;
  DensityMatrix rho_b;                 // all baths together
  std::vector<DensityMatrix> rho_nu;
  ComplexMatrix system_basis;
  std::vector<double> joint;           // p(s, x_B), s outer
};

Snapshot take_snapshot(const DensityMatrix& rho, const BuiltModel& model, const RunSettings& s,
                       const CoarseGraining& bath_product) {
  const Dims& dims = model.dims();
  const Index ds = dims[0];
  const Index db = rho.dim() / ds;
  Dims bath_dims(dims.begin() + 1, dims.end());
  DensityMatrix rho_s = partial_trace(rho, {0});
  ComplexMatrix w = s.system_basis == SystemBasisMode::Eigenbasis ? rho_s.spectrum().vectors
                                                                  : fixed_system_basis(s, ds);
  std::vector<double> joint;
  joint.reserve(static_cast<std::size_t>(ds) * bath_product.size());
  ComplexMatrix rho_b = ComplexMatrix::Zero(db, db);
  double total = 0.0;
  for (Index a = 0; a < ds; ++a) {
    const ComplexMatrix m = conditional_bath(rho.matrix(), w.col(a), db);
    rho_b += m;
    const RealVector diag = sandwich_diagonal(m, bath_product.frame());
    for (std::size_t x = 0; x < bath_product.size(); ++x) {
      double p = diag.segment(bath_product.offset(x), bath_product.volume(x)).sum();
      if (p < -tol::kPositivity) throw Error(ErrorCode::InvalidArgument, "negative joint outcome probability");
      p = std::max(p, 0.0);
      joint.push_back(p);
      total += p;
    }
  }
  if (std::abs(total - 1.0) > tol::kNormalized) throw Error(ErrorCode::NotNormalized, "joint outcome probabilities");
  for (double& p : joint) p /= total;

  DensityMatrix rb = DensityMatrix::trusted(std::move(rho_b), bath_dims);
  std::vector<DensityMatrix> rho_nu;
  for (std::size_t nu = 0; nu < bath_dims.size(); ++nu) {
    rho_nu.push_back(bath_dims.size() == 1 ? rb : partial_trace(rb, {nu}));
  }
  return Snapshot{std::move(rho_s), std::move(rb), std::move(rho_nu), std::move(w), std::move(joint)};
}

enum class OpenVariant { Single, Generalized, Multi, Particle };

struct OpenInput {
  OpenVariant variant;
  ComplexMatrix rho0;
  double S_vn_initial;  // S_vN[ρ_SB(0)], constant in time
  bool initial_ok = true;
  double initial_residual = 0.0;
};

ThermoLedger open_engine(const BuiltModel& model, const RunSettings& s, const std::vector<Bath>& baths,
                         const OpenInput& in) {
  const bool particles = in.variant == OpenVariant::Particle;
  const std::size_t nb = baths.size();
  const Index ds = model.dims()[0];
  const Protocol protocol = model.protocol(s.t_max, s.steps);
  const double dt = protocol.dt();
  const auto kq = quench_index(model, dt, s.steps);

  std::vector<CoarseGraining> parts;
  for (const auto& b : baths) parts.push_back(b.graining);
  const CoarseGraining bath_product = product_graining(parts);
  std::vector<std::size_t> shape{static_cast<std::size_t>(ds)};
  for (const auto& b : baths) shape.push_back(b.graining.size());

  ThermoLedger L;
  L.kind = in.variant == OpenVariant::Single        ? RunKind::Open
           : in.variant == OpenVariant::Generalized ? RunKind::OpenGeneralized
           : in.variant == OpenVariant::Multi       ? RunKind::Multibath
                                                    : RunKind::Particle;
  L.dt = dt;
  L.steps = s.steps;
  L.system_dim = ds;
  L.r_delta = delta_residual(baths);
  L.slack = std::max(tol::kFloatSlack, 2.0 * L.r_delta);
  L.quadrature_tolerance = s.quadrature_constant * dt * dt;
  L.initial_state_ok = in.initial_ok;
  L.initial_state_residual = in.initial_residual;
  L.hierarchy.r_delta = L.r_delta;
  L.hierarchy.slack = L.slack;
  L.hierarchy.quadrature_tolerance = L.quadrature_tolerance;
  L.S_bath.assign(nb, {});
  L.S_eq_bath.assign(nb, {});
  L.N_bath.assign(nb, {});
  L.U_bath_binned.assign(nb, {});
  L.clausius.assign(nb, {});

  const ComplexMatrix v_total = model.coupling_total();
  std::optional<HermitianOperator> n_total;
  if (particles) n_total = model.total_number();

  DensityMatrix rho = DensityMatrix::trusted(in.rho0, model.dims());
  // Running sums and previous-point values.
  double W = 0.0;
  double W_chem = 0.0;
  std::vector<double> Q(nb, 0.0);
  std::vector<double> C(nb, 0.0);
  double prev_eps = 0.0;
  double prev_drive = 0.0;  // tr{D_S ρ_S} at the previous grid point
  std::vector<double> prev_U(nb), prev_N(nb), prev_beta(nb), prev_alpha(nb), prev_mu(nb);
  double U_S0 = 0.0;
  double S_S0 = 0.0, S_vn0 = 0.0, S_joint0 = 0.0, I0 = 0.0;
  std::vector<double> U0(nb), N0(nb), S0(nb), Seq0(nb), D0(nb);

  for (std::size_t k = 0; k <= s.steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    if (k > 0) {
      const ComplexMatrix u = protocol.step_propagator(k - 1);
      rho = DensityMatrix::trusted(u * rho.matrix() * u.adjoint(), model.dims());
    }
    if (n_total) {
      const double c = commutator_norm(model.hamiltonian_for(epsilon_at(model, k, dt, kq)).matrix(), n_total->matrix());
      if (c > tol::kCommute) {
        std::ostringstream os;
        os << "total particle number is not conserved (max|[H,N]| = " << c << " at t = " << t << ")";
        throw Error(ErrorCode::NonConserving, os.str());
      }
    }
    const Snapshot snap = take_snapshot(rho, model, s, bath_product);
    const double eps = epsilon_at(model, k, dt, kq);

    EnergyLedgerEntry e;
    e.time = t;
    const ComplexMatrix hs = model.system_static() + eps * model.system_drive();
    const double drive = internal_energy(model.system_drive(), snap.rho_s.matrix());
    e.U_S = internal_energy(hs, snap.rho_s.matrix()) + internal_energy(v_total, rho.matrix());
    if (k > 0) W += work_increment(eps - prev_eps, drive, prev_drive, kq && *kq == k - 1);
    prev_eps = eps;
    prev_drive = drive;

    // System and joint entropies.
    std::vector<double> ps(static_cast<std::size_t>(ds));
    for (std::size_t a = 0; a < ps.size(); ++a) {
      double acc = 0.0;
      for (std::size_t x = 0; x < bath_product.size(); ++x) acc += snap.joint[a * bath_product.size() + x];
      ps[a] = acc;
    }
    const double S_S = shannon(ps);
    const double S_vn = vn_entropy(snap.rho_s);
    std::vector<Index> joint_volumes;
    joint_volumes.reserve(snap.joint.size());
    for (Index a = 0; a < ds; ++a) {
      for (std::size_t x = 0; x < bath_product.size(); ++x) joint_volumes.push_back(bath_product.volume(x));
    }
    const double S_joint = obs_entropy(snap.joint, joint_volumes);
    const double I_obs = total_information(ProbabilityTable{shape, snap.joint});
    const double I_q = S_vn + vn_entropy(snap.rho_b) - in.S_vn_initial;

    double sum_S_nu = 0.0, sum_C = 0.0, sum_D = 0.0, sum_fixed = 0.0, gap_bc = 0.0;
    double wchem_inc = 0.0;
    double eps_hat = 0.0;
    e.U_B.resize(nb);
    e.Q.resize(nb);
    e.beta_star.resize(nb);
    std::vector<double> mu_star(nb, 0.0);
    for (std::size_t nu = 0; nu < nb; ++nu) {
      const Bath& b = baths[nu];
      const DensityMatrix& r = snap.rho_nu[nu];
      const double U = internal_energy(b.h, r);
      const double N = b.n ? internal_energy(*b.n, r) : 0.0;
      double beta_star = 0.0;
      double alpha_star = 0.0;
      if (b.n) {
        const GrandPotentialPoint g = effective_beta_mu(JointSpectrum{b.energies, b.particles, b.vectors}, U, N);
        if (!g.solved) {
          L.grand_unsolved = true;
          L.warnings.push_back("effective (beta, mu) not solved for bath " + std::to_string(nu + 1) +
                               " at t = " + std::to_string(t));
        }
        beta_star = g.beta_star;
        alpha_star = g.beta_star * g.mu_star;
        mu_star[nu] = g.mu_star;
      } else {
        const EffectiveTemperature et = effective_beta(b.energies, U);
        if (et.saturated) {
          L.saturated = true;
          std::ostringstream os;
          os << "effective temperature of bath " << nu + 1 << " saturated at t = " << t;
          throw Error(ErrorCode::SaturatedTemperature, os.str());
        }
        beta_star = et.beta_star;
      }
      const OutcomeDistribution pd = outcome_distribution(r, b.graining);
      const double S_nu = obs_entropy(pd.probabilities, pd.volumes);
      const EquilibriumPoint eq = b.point(beta_star, alpha_star);
      double binned = 0.0;
      for (std::size_t x = 0; x < pd.size(); ++x) binned += (pd.labels[x].front().value + 0.5 * s.delta) * pd.probabilities[x];
      eps_hat = std::max(eps_hat, perturbation_scale(pd, b.reference).epsilon);

      if (k == 0) {
        U0[nu] = U;
        N0[nu] = N;
        S0[nu] = S_nu;
        Seq0[nu] = eq.entropy;
      } else {
        const double dU = U - prev_U[nu];
        const double dN = N - prev_N[nu];
        const double mu_mid = 0.5 * (mu_star[nu] + prev_mu[nu]);
        Q[nu] -= dU - mu_mid * dN;
        wchem_inc += mu_mid * (-dN);  // particles entering the system
        C[nu] += 0.5 * (beta_star + prev_beta[nu]) * dU - 0.5 * (alpha_star + prev_alpha[nu]) * dN;
      }
      prev_U[nu] = U;
      prev_N[nu] = N;
      prev_beta[nu] = beta_star;
      prev_alpha[nu] = alpha_star;
      prev_mu[nu] = mu_star[nu];

      const RealVector p_star = b.populations(beta_star, alpha_star);
      const RealVector p_ref = b.populations(b.beta, b.beta * b.mu);
      const double D = relative_entropy(std::span<const double>(p_star.data(), static_cast<std::size_t>(p_star.size())),
                                std::span<const double>(p_ref.data(), static_cast<std::size_t>(p_ref.size())));
      if (k == 0) D0[nu] = D;
      sum_D += D - D0[nu];
      sum_S_nu += S_nu - S0[nu];
      sum_C += C[nu];
      sum_fixed += b.beta * ((U - U0[nu]) - b.mu * (N - N0[nu]));  // -β_ν Q_ν with fixed μ_ν
      gap_bc += (eq.entropy - S_nu) - (Seq0[nu] - S0[nu]);

      e.U_B[nu] = U;
      e.Q[nu] = Q[nu];
      e.beta_star[nu] = beta_star;
      L.S_bath[nu].push_back(S_nu);
      L.S_eq_bath[nu].push_back(eq.entropy);
      L.N_bath[nu].push_back(N);
      L.U_bath_binned[nu].push_back(binned);
      L.clausius[nu].push_back(C[nu]);
    }
    W_chem += wchem_inc;
    e.W = W;
    e.W_chem = W_chem;
    if (particles) e.mu_star = mu_star;
    e.epsilon_hat = eps_hat;

    if (k == 0) {
      U_S0 = e.U_S;
      S_S0 = S_S;
      S_vn0 = S_vn;
      S_joint0 = S_joint;
      I0 = I_obs;
    }
    const double sumQ = std::accumulate(Q.begin(), Q.end(), 0.0);
    L.first_law_residual.push_back((e.U_S - U_S0) - sumQ - W - W_chem);

    HierarchyPoint h;
    const double dS_S = S_S - S_S0;
    h.sigma_a = S_joint - S_joint0;
    h.sigma_b = dS_S + sum_S_nu;
    h.sigma_c = dS_S + sum_C;
    h.sigma_d = dS_S + sum_fixed;
    h.sigma_d_tilde = (S_vn - S_vn0) + sum_fixed;
    h.gap_ab = I_obs - I0;
    h.gap_bc = gap_bc;
    h.gap_cd_tilde = sum_D;
    h.I_obs = I_obs;
    h.I_quantum = I_q;
    L.hierarchy.points.push_back(h);
    L.decomposition.push_back({h.sigma_c, -gap_bc, I0 - I_obs});

    L.time.push_back(t);
    L.energy.push_back(std::move(e));
    L.S_global.push_back(S_joint);
    L.S_system.push_back(S_S);
    L.S_system_vn.push_back(S_vn);
    L.epsilon.push_back(eps);
  }

  // dΣ_d/dt by finite differences; recorded only.
  const std::size_t n = L.time.size();
  L.sigma_d_rate.assign(n, 0.0);
  for (std::size_t k = 0; k < n && n > 1; ++k) {
    const std::size_t a = k == 0 ? 0 : k - 1;
    const std::size_t b = k + 1 == n ? k : k + 1;
    L.sigma_d_rate[k] =
        (L.hierarchy.points[b].sigma_d - L.hierarchy.points[a].sigma_d) / (L.time[b] - L.time[a]);
  }
  return L;
}

ComplexMatrix validated_system_state(const BuiltModel& model, const ComplexMatrix& rho_s0) {
  const Index ds = model.dims()[0];
  if (rho_s0.rows() != ds || rho_s0.cols() != ds) {
    throw Error(ErrorCode::DimensionMismatch, "initial system state has the wrong dimension");
  }
  return DensityMatrix(rho_s0, {ds}).matrix();
}

// ρ_S(0) must be diagonal in the initial system basis.
void check_system_diagonal(const RunSettings& s, const ComplexMatrix& rho_s, OpenInput& in) {
  if (s.system_basis == SystemBasisMode::Eigenbasis) return;
  const ComplexMatrix w = fixed_system_basis(s, rho_s.rows());
  ComplexMatrix r = w.adjoint() * rho_s * w;
  r.diagonal().setZero();
  in.initial_residual = max_abs(r);
  if (in.initial_residual > tol::kSupport) {
    in.initial_ok = false;
    if (s.initial_check == InitialCheck::Strict) {
      std::ostringstream os;
      os << "initial system state has coherences " << in.initial_residual << " in the chosen system basis";
      throw Error(ErrorCode::InvalidInitialState, os.str());
    }
  }
}

ThermoLedger product_run(const BuiltModel& model, const RunSettings& s, const ComplexMatrix& rho_s0,
                         OpenVariant variant) {
  require_settings(s);
  const bool particles = variant == OpenVariant::Particle;
  if (particles && !model.conserves_particles()) {
    throw Error(ErrorCode::NonConserving, "model has no conserved particle number");
  }
  const std::vector<Bath> baths = prepare_baths(model, s, particles);
  const ComplexMatrix rs = validated_system_state(model, rho_s0);
  OpenInput in{variant, ComplexMatrix(), 0.0};
  check_system_diagonal(s, rs, in);
  ComplexMatrix rho = rs;
  double S = vn_entropy(DensityMatrix::trusted(rs, {rs.rows()}));
  for (const auto& b : baths) {
    rho = kron(rho, b.reference_state());
    S += b.S_reference;
  }
  in.rho0 = std::move(rho);
  in.S_vn_initial = S;
  return open_engine(model, s, baths, in);
}

}  // namespace

ThermoLedger run_open(const BuiltModel& model, const RunSettings& settings, const ComplexMatrix& rho_s0) {
  if (model.bath_count() != 1) throw Error(ErrorCode::InvalidArgument, "run_open needs a single-bath model");
  return product_run(model, settings, rho_s0, OpenVariant::Single);
}

ThermoLedger run_multibath(const BuiltModel& model, const RunSettings& settings, const ComplexMatrix& rho_s0) {
  return product_run(model, settings, rho_s0, OpenVariant::Multi);
}

ThermoLedger run_particle(const BuiltModel& model, const RunSettings& settings, const ComplexMatrix& rho_s0) {
  return product_run(model, settings, rho_s0, OpenVariant::Particle);
}

CoarseGraining open_initial_graining(const BuiltModel& model, const RunSettings& settings) {
  if (model.bath_count() != 1) throw Error(ErrorCode::InvalidArgument, "generalized runs need a single-bath model");
  const Index ds = model.dims()[0];
  std::vector<CoarseGraining> parts{rank1_graining(fixed_system_basis(settings, ds)),
                                    energy_graining(model.bath_hamiltonian(0), settings.delta, settings.anchor)};
  return product_graining(parts, model.dims());
}

OutcomeDistribution product_initial_joint(const BuiltModel& model, const RunSettings& settings,
                                          std::span<const double> system_populations) {
  require_settings(settings);
  const CoarseGraining x = open_initial_graining(model, settings);
  const std::vector<Bath> baths = prepare_baths(model, settings, false);
  const auto& ref = baths[0].reference.probabilities;
  if (system_populations.size() != static_cast<std::size_t>(model.dims()[0])) {
    throw Error(ErrorCode::LengthMismatch, "one population per system basis state required");
  }
  OutcomeDistribution d;
  for (std::size_t a = 0; a < system_populations.size(); ++a) {
    for (double pe : ref) d.probabilities.push_back(system_populations[a] * pe);
  }
  d.volumes = x.volumes();
  for (std::size_t k = 0; k < x.size(); ++k) d.labels.push_back(x.label(k));
  return d;
}

ThermoLedger run_open_generalized(const BuiltModel& model, const RunSettings& settings,
                                  const OutcomeDistribution& joint) {
  require_settings(settings);
  const CoarseGraining x = open_initial_graining(model, settings);
  if (joint.size() != x.size()) throw Error(ErrorCode::LengthMismatch, "initial joint has the wrong number of outcomes");
  if (!joint.labels.empty() && joint.labels.size() != x.size()) {
    throw Error(ErrorCode::LabelMismatch, "initial joint labels do not match the initial graining");
  }
  for (std::size_t k = 0; k < joint.labels.size(); ++k) {
    if (joint.labels[k] != x.label(k)) throw Error(ErrorCode::LabelMismatch, "initial joint labels do not match");
  }
  double total = 0.0;
  for (double p : joint.probabilities) {
    if (p < -tol::kNegativeClamp) throw Error(ErrorCode::NotNormalized, "negative initial probability");
    total += p;
  }
  if (std::abs(total - 1.0) > tol::kNormalized) throw Error(ErrorCode::NotNormalized, "initial joint is not normalized");

  const std::vector<Bath> baths = prepare_baths(model, settings, false);
  std::vector<double> p(joint.probabilities);
  for (double& v : p) v = std::max(v, 0.0) / total;
  OpenInput in{OpenVariant::Generalized, block_uniform_state(x, p), 0.0};
  // Block-uniform states have S_vN = S_obs.
  in.S_vn_initial = obs_entropy(p, x.volumes());
  return open_engine(model, settings, baths, in);
}

DensityMatrix coarse_gibbs_state(const HermitianOperator& h, double beta, double delta, std::optional<double> anchor) {
  const CoarseGraining x = energy_graining(h, delta, anchor);
  const DensityMatrix pi = gibbs_state(h, beta);
  const auto p = outcome_probabilities(pi.matrix(), x);
  return DensityMatrix::trusted(block_uniform_state(x, p), {h.dim()});
}

ThermoLedger run_isolated(const BuiltModel& model, const RunSettings& s, const DensityMatrix& rho0) {
  require_settings(s);
  if (rho0.dim() != model.dim()) throw Error(ErrorCode::DimensionMismatch, "initial state has the wrong dimension");
  if (s.betas.empty()) throw Error(ErrorCode::LengthMismatch, "isolated runs need a reference beta");
  const Protocol protocol = model.protocol(s.t_max, s.steps);
  const double dt = protocol.dt();
  const auto kq = quench_index(model, dt, s.steps);

  ThermoLedger L;
  L.kind = RunKind::Isolated;
  L.dt = dt;
  L.steps = s.steps;
  L.quadrature_tolerance = s.quadrature_constant * dt * dt;

  DensityMatrix rho = DensityMatrix::trusted(rho0.matrix(), model.dims());
  const ComplexMatrix& drive_full = model.system_drive_full();

  HermitianOperator h_prev = model.hamiltonian_for(epsilon_at(model, 0, dt, kq));
  {
    const CoarseGraining x0 = energy_graining(h_prev, s.delta, s.anchor);
    const auto mem = is_equilibrium_member(rho, x0, tol::kNormalizedLoose);
    L.initial_state_ok = mem.member;
    L.initial_state_residual = mem.residual;
    if (!mem.member) L.warnings.push_back("initial state is not in the equilibrium set; second-law checks suppressed");
    const DensityMatrix pi = gibbs_state(h_prev, s.betas[0]);
    L.r_delta = std::abs(vn_entropy(pi) - obs_entropy(pi, x0));
    L.slack = std::max(tol::kFloatSlack, 2.0 * L.r_delta);
    if (L.r_delta > tol::kFloatSlack) L.warnings.push_back("energy windows do not resolve the levels; Clausius bound reported only");
  }

  double W = 0.0, clausius = 0.0;
  double prev_eps = 0.0, prev_drive = 0.0, prev_U = 0.0, prev_beta = 0.0;
  double U0 = 0.0, S0 = 0.0, Seq0 = 0.0;
  RealVector prev_pop;
  for (std::size_t k = 0; k <= s.steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    const double eps = epsilon_at(model, k, dt, kq);
    const HermitianOperator h = k == 0 ? h_prev : model.hamiltonian_for(eps);
    if (k > 0) {
      const ComplexMatrix u = protocol.step_propagator(k - 1);
      rho = DensityMatrix::trusted(u * rho.matrix() * u.adjoint(), model.dims());
    }
    const double U = internal_energy(h, rho);
    const double drive = internal_energy(drive_full, rho.matrix());
    const EffectiveTemperature et = effective_beta(h, U);
    if (et.saturated) {
      L.saturated = true;
      std::ostringstream os;
      os << "effective temperature saturated at t = " << t;
      throw Error(ErrorCode::SaturatedTemperature, os.str());
    }
    const Spectrum& sp = h.spectrum();
    const RealVector pop = gibbs_populations(sp.values, et.beta_star);
    const double S_eq = gibbs_point(sp.values, et.beta_star).entropy;
    const CoarseGraining x = energy_graining(h, s.delta, s.anchor);
    const double S = obs_entropy(rho, x);

    if (k == 0) {
      U0 = U;
      S0 = S;
      Seq0 = S_eq;
    } else {
      W += work_increment(eps - prev_eps, drive, prev_drive, kq && *kq == k - 1);
      // đQ = dU - tr{dH π(β*)}, with π averaged over both ends of the step.
      const ComplexMatrix dh = h.matrix() - h_prev.matrix();
      const double w_eq = 0.5 * (sandwich_diagonal(dh, h_prev.spectrum().vectors).dot(prev_pop) +
                                 sandwich_diagonal(dh, sp.vectors).dot(pop));
      clausius += 0.5 * (et.beta_star + prev_beta) * ((U - prev_U) - w_eq);
    }
    prev_eps = eps;
    prev_drive = drive;
    prev_U = U;
    prev_beta = et.beta_star;
    prev_pop = pop;
    h_prev = h;

    EnergyLedgerEntry e;
    e.time = t;
    e.U_S = U;
    e.W = W;
    e.beta_star = {et.beta_star};
    L.energy.push_back(std::move(e));
    L.time.push_back(t);
    L.epsilon.push_back(eps);
    L.U_total.push_back(U);
    L.S_obs.push_back(S);
    L.sigma.push_back(S - S0);
    L.clausius_isolated.push_back(clausius);
    L.clausius_endpoint.push_back(S_eq - Seq0);
    L.S_eq.push_back(S_eq);
    L.beta_star.push_back(et.beta_star);
    L.first_law_residual.push_back((U - U0) - W);
  }
  L.hierarchy.r_delta = L.r_delta;
  L.hierarchy.slack = L.slack;
  L.hierarchy.quadrature_tolerance = L.quadrature_tolerance;
  return L;
}

double clausius_closure_residual(const ThermoLedger& L) {
  double r = 0.0;
  if (L.kind == RunKind::Isolated) {
    for (std::size_t k = 0; k < L.time.size(); ++k) {
      r = std::max(r, std::abs(L.clausius_isolated[k] - L.clausius_endpoint[k]));
    }
    return r;
  }
  for (std::size_t k = 0; k < L.time.size(); ++k) {
    const auto& h = L.hierarchy.points[k];
    const double basis_term = (L.S_system_vn[k] - L.S_system_vn[0]) - (L.S_system[k] - L.S_system[0]);
    r = std::max(r, std::abs(h.sigma_d_tilde - h.sigma_c - h.gap_cd_tilde - basis_term));
  }
  return r;
}

double max_first_law_residual(const ThermoLedger& L) {
  double r = 0.0;
  for (double v : L.first_law_residual) r = std::max(r, std::abs(v));
  return r;
}

std::vector<Violation> check_hierarchy(const ThermoLedger& L) {
  std::vector<Violation> out;
  auto require = [&](bool ok, const char* name, double t, double value, double bound) {
    if (!ok) out.push_back({name, t, value, bound});
  };
  const double quad = L.quadrature_tolerance;
  const double slack = L.slack;
  // The ordering needs system and bath uncorrelated at t = 0, which a
  // generalized run need not be.
  const bool ordered = L.kind != RunKind::OpenGeneralized || L.hierarchy.points.empty() ||
                       L.hierarchy.points.front().I_obs <= tol::kFloatSlack;
  for (std::size_t k = 0; k < L.time.size(); ++k) {
    const double t = L.time[k];
    const double fl = L.first_law_residual[k];
    require(std::abs(fl) <= quad + tol::kFloatSlack, "first_law", t, fl, quad);
    if (L.kind == RunKind::Isolated) {
      if (!L.initial_state_ok) continue;
      require(L.sigma[k] >= -slack, "sigma_nonnegative", t, L.sigma[k], -slack);
      // S_obs ≤ S_eq(β*) needs windows that resolve the levels (r_δ = 0);
      // coarser windows only get the Clausius value reported. The initial
      // term S_eq(β*_0) - S_obs(0) vanishes for a Gibbs start and is kept
      // otherwise.
      if (L.r_delta > tol::kFloatSlack) continue;
      const double start = std::max(0.0, L.S_eq[0] - L.S_obs[0]);
      require(L.clausius_isolated[k] + start >= L.sigma[k] - slack - quad, "clausius_ge_sigma", t,
              L.clausius_isolated[k] + start - L.sigma[k], -slack - quad);
      continue;
    }
    const auto& h = L.hierarchy.points[k];
    require(h.sigma_a >= -slack, "sigma_a_nonnegative", t, h.sigma_a, -slack);
    if (ordered) {
      require(h.sigma_a <= h.sigma_b + tol::kGapIdentity, "sigma_a_le_sigma_b", t, h.sigma_a - h.sigma_b,
              tol::kGapIdentity);
      require(h.sigma_b <= h.sigma_c + slack + quad, "sigma_b_le_sigma_c", t, h.sigma_b - h.sigma_c, slack + quad);
      require(h.sigma_c <= h.sigma_d_tilde + slack + quad, "sigma_c_le_sigma_d_tilde", t,
              h.sigma_c - h.sigma_d_tilde, slack + quad);
    }
    const double ab = h.sigma_b - h.sigma_a - h.gap_ab;
    require(std::abs(ab) <= tol::kGapIdentity, "gap_ab_identity", t, ab, tol::kGapIdentity);
    const double bc = h.sigma_c - h.sigma_b - h.gap_bc;
    require(std::abs(bc) <= quad + tol::kFloatSlack, "gap_bc_identity", t, bc, quad);
    const double basis_term = (L.S_system_vn[k] - L.S_system_vn[0]) - (L.S_system[k] - L.S_system[0]);
    const double cd = h.sigma_d_tilde - h.sigma_c - h.gap_cd_tilde - basis_term;
    require(std::abs(cd) <= quad + 2 * L.r_delta + tol::kFloatSlack, "gap_cd_identity", t, cd,
            quad + 2 * L.r_delta);
    const auto& d = L.decomposition[k];
    const double dec = d.line1 + d.line2 + d.line3 - h.sigma_a;
    require(std::abs(dec) <= quad + tol::kGapIdentity, "decomposition_sum", t, dec, quad);
    const double cap = 2.0 * std::log(static_cast<double>(L.system_dim));
    require(h.I_obs <= h.I_quantum + tol::kFloatSlack && h.I_quantum <= cap + tol::kFloatSlack,
            "mutual_information_bound", t, std::max(h.I_obs - h.I_quantum, h.I_quantum - cap), tol::kFloatSlack);
  }
  return out;
}

std::string ConjectureReport::table() const {
  std::ostringstream os;
  os << std::setw(12) << "time" << std::setw(16) << "line1" << std::setw(16) << "|line2|" << std::setw(16)
     << "|line3|" << '\n';
  os << std::scientific << std::setprecision(6);
  for (const auto& r : rows) {
    os << std::setw(12) << std::defaultfloat << r.time << std::scientific << std::setw(16) << r.line1
       << std::setw(16) << r.line2_abs << std::setw(16) << r.line3_abs << '\n';
  }
  os << "line1 growth rate " << line1_rate << ", |line2| growth rate " << line2_rate << ", |line3| plateau "
     << line3_plateau << '\n';
  return os.str();
}

ConjectureReport conjecture_report(const ThermoLedger& L) {
  ConjectureReport rep;
  if (L.kind == RunKind::Isolated) return rep;
  for (std::size_t k = 0; k < L.time.size(); ++k) {
    const auto& d = L.decomposition[k];
    rep.rows.push_back({L.time[k], d.line1, std::abs(d.line2), std::abs(d.line3)});
  }
  const std::size_t n = rep.rows.size();
  auto slope = [&](auto get) {
    const std::size_t a = n / 2;
    double st = 0, sy = 0, stt = 0, sty = 0;
    const double m = static_cast<double>(n - a);
    for (std::size_t k = a; k < n; ++k) {
      const double t = rep.rows[k].time;
      const double y = get(rep.rows[k]);
      st += t;
      sy += y;
      stt += t * t;
      sty += t * y;
    }
    const double den = m * stt - st * st;
    return den > 0 ? (m * sty - st * sy) / den : 0.0;
  };
  if (n >= 2) {
    rep.line1_rate = slope([](const ConjectureRow& r) { return r.line1; });
    rep.line2_rate = slope([](const ConjectureRow& r) { return r.line2_abs; });
    const std::size_t q = n - std::max<std::size_t>(1, n / 4);
    double acc = 0.0;
    for (std::size_t k = q; k < n; ++k) acc += rep.rows[k].line3_abs;
    rep.line3_plateau = acc / static_cast<double>(n - q);
  }
  return rep;
}

}  // namespace obsent
