#include "obsent/thermo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "obsent/errors.hpp"
#include "obsent/tolerances.hpp"

namespace obsent {

namespace {

constexpr int kMaxBetaIterations = 200;
constexpr int kMaxNewtonIterations = 50;
constexpr int kMaxGrandIterations = 400;

// Normalized weights ∝ exp(logw_i), computed with the max shift.
RealVector normalized_weights(const RealVector& logw, double* log_z = nullptr) {
  const double shift = logw.maxCoeff();
  RealVector w = (logw.array() - shift).exp().matrix();
  const double z = w.sum();
  if (log_z) *log_z = shift + std::log(z);
  return w / z;
}

struct Moments {
  double mean_e = 0.0;
  double mean_n = 0.0;
  double var_e = 0.0;
  double var_n = 0.0;
  double cov = 0.0;
};

// Moments of (E, N) in the weights ∝ exp(-βE + αN). N may be empty.
Moments moments(const RealVector& e, const RealVector* n, double beta, double alpha) {
  RealVector logw = -beta * e;
  if (n) logw += alpha * (*n);
  const RealVector p = normalized_weights(logw);
  Moments m;
  m.mean_e = p.dot(e);
  const RealVector de = e.array() - m.mean_e;
  m.var_e = p.dot(de.cwiseProduct(de));
  if (n) {
    m.mean_n = p.dot(*n);
    const RealVector dn = n->array() - m.mean_n;
    m.var_n = p.dot(dn.cwiseProduct(dn));
    m.cov = p.dot(de.cwiseProduct(dn));
  }
  return m;
}

// Monotone solve of ⟨E⟩(β) = target in the family exp(-βE + αN) at fixed α.
EffectiveTemperature solve_beta(const RealVector& e, const RealVector* n, double alpha, double target) {
  EffectiveTemperature out;
  const double emin = e.minCoeff();
  const double emax = e.maxCoeff();
  const double width = emax - emin;
  const double scale = std::max(1.0, std::max(std::abs(emin), std::abs(emax)));

  if (width <= 1e-14 * scale) {
    if (std::abs(target - emin) > 1e-10 * scale) {
      throw Error(ErrorCode::EnergyOutOfRange, "target energy differs from the single energy level");
    }
    out.achieved_energy = emin;
    out.residual = emin - target;
    return out;
  }
  if (target < emin - 1e-10 * width || target > emax + 1e-10 * width) {
    std::ostringstream os;
    os << "target energy " << target << " outside the spectrum [" << emin << ", " << emax << "]";
    throw Error(ErrorCode::EnergyOutOfRange, os.str());
  }

  const double beta_max = tol::kBetaMaxScale / width;
  const double edge = tol::kSaturationEdge * std::max(1.0, width);
  const double stop = tol::kBetaResidual * width;
  auto finish = [&](double beta, bool saturated) {
    out.beta_star = beta;
    out.achieved_energy = moments(e, n, beta, alpha).mean_e;
    out.residual = out.achieved_energy - target;
    out.saturated = saturated;
    return out;
  };
  if (target <= emin + edge) return finish(beta_max, true);
  if (target >= emax - edge) return finish(-beta_max, true);

  // f(β) = ⟨E⟩ - target is strictly decreasing.
  const double f0 = moments(e, n, 0.0, alpha).mean_e - target;
  if (std::abs(f0) <= stop) return finish(0.0, false);
  const double dir = f0 > 0 ? 1.0 : -1.0;
  double lo = 0.0;  // sign(f) == dir at lo
  double hi = dir / width;
  int it = 0;
  while (true) {
    ++it;
    const double fh = moments(e, n, hi, alpha).mean_e - target;
    if (std::abs(fh) <= stop) {
      out.iterations = it;
      return finish(hi, false);
    }
    if ((fh > 0) != (dir > 0)) break;
    if (std::abs(hi) >= beta_max) {
      out.iterations = it;
      return finish(dir * beta_max, true);
    }
    lo = hi;
    hi = std::clamp(2.0 * hi, -beta_max, beta_max);
  }

  double beta = 0.5 * (lo + hi);
  for (; it < kMaxBetaIterations; ++it) {
    const Moments m = moments(e, n, beta, alpha);
    const double f = m.mean_e - target;
    if (std::abs(f) <= stop) break;
    if ((f > 0) == (dir > 0)) lo = beta;
    else hi = beta;
    double next = m.var_e > 0 ? beta + f / m.var_e : std::numeric_limits<double>::quiet_NaN();
    const double a = std::min(lo, hi);
    const double b = std::max(lo, hi);
    if (!(next > a && next < b)) next = 0.5 * (lo + hi);
    if (next == beta || b - a <= 4 * std::numeric_limits<double>::epsilon() * std::abs(beta)) break;
    beta = next;
  }
  out.iterations = it;
  return finish(beta, false);
}

void require_commuting(const HermitianOperator& h, const HermitianOperator& n) {
  if (h.dim() != n.dim()) throw Error(ErrorCode::DimensionMismatch, "H and N differ in dimension");
  const double c = commutator_norm(h.matrix(), n.matrix());
  if (c > tol::kCommute) {
    std::ostringstream os;
    os << "H and N do not commute (max|[H,N]| = " << c << ")";
    throw Error(ErrorCode::NonCommuting, os.str());
  }
}

DensityMatrix state_from(const ComplexMatrix& vectors, const RealVector& p, Dims dims) {
  if (dims.empty()) dims = {vectors.rows()};
  return DensityMatrix::trusted(vectors * p.cast<Complex>().asDiagonal() * vectors.adjoint(), std::move(dims));
}

void require_uniform_grid(std::span<const double> times, std::size_t n) {
  if (times.size() != n || n == 0) throw Error(ErrorCode::GridMismatch, "time grid and series lengths differ");
  if (n < 2) return;
  const double dt = times[1] - times[0];
  if (!(dt > 0)) throw Error(ErrorCode::GridMismatch, "time grid must be strictly increasing");
  for (std::size_t k = 1; k + 1 < n; ++k) {
    if (std::abs((times[k + 1] - times[k]) - dt) > 1e-9 * dt) {
      throw Error(ErrorCode::GridMismatch, "time grid is not uniform");
    }
  }
}

}  // namespace

JointSpectrum joint_spectrum(const HermitianOperator& h, const HermitianOperator& n) {
  require_commuting(h, n);
  const Spectrum& ns = n.spectrum();
  JointSpectrum out;
  out.energies.resize(h.dim());
  out.particles.resize(h.dim());
  out.vectors.resize(h.dim(), h.dim());
  Index start = 0;
  while (start < ns.values.size()) {
    Index stop = start + 1;
    while (stop < ns.values.size() && ns.values(stop) - ns.values(start) <= tol::kDegenerate) ++stop;
    const Index len = stop - start;
    const ComplexMatrix sector = ns.vectors.middleCols(start, len);
    const ComplexMatrix hs = sector.adjoint() * h.matrix() * sector;
    const Spectrum local = eig_hermitian(ComplexMatrix(0.5 * (hs + hs.adjoint())));
    out.vectors.middleCols(start, len) = sector * local.vectors;
    out.energies.segment(start, len) = local.values;
    out.particles.segment(start, len).setConstant(ns.values.segment(start, len).mean());
    start = stop;
  }
  return out;
}

RealVector gibbs_populations(const RealVector& energies, double beta) {
  if (!std::isfinite(beta)) throw Error(ErrorCode::InvalidArgument, "beta must be finite");
  return normalized_weights(-beta * energies);
}

RealVector grand_populations(const RealVector& energies, const RealVector& particles, double beta,
                             double alpha) {
  if (!std::isfinite(beta) || !std::isfinite(alpha)) {
    throw Error(ErrorCode::InvalidArgument, "beta and beta*mu must be finite");
  }
  return normalized_weights(-beta * energies + alpha * particles);
}

EquilibriumPoint gibbs_point(const RealVector& energies, double beta) {
  double log_z = 0.0;
  const RealVector logw = -beta * energies;
  const RealVector p = normalized_weights(logw, &log_z);
  EquilibriumPoint pt;
  pt.energy = p.dot(energies);
  // S = -Σ p (logw - ln Z)
  pt.entropy = log_z - p.dot(logw);
  return pt;
}

EquilibriumPoint grand_point(const RealVector& energies, const RealVector& particles, double beta,
                             double alpha) {
  double log_z = 0.0;
  const RealVector logw = -beta * energies + alpha * particles;
  const RealVector p = normalized_weights(logw, &log_z);
  EquilibriumPoint pt;
  pt.energy = p.dot(energies);
  pt.particles = p.dot(particles);
  pt.entropy = log_z - p.dot(logw);
  return pt;
}

DensityMatrix gibbs_state(const HermitianOperator& h, double beta, Dims dims) {
  const Spectrum& s = h.spectrum();
  return state_from(s.vectors, gibbs_populations(s.values, beta), std::move(dims));
}

DensityMatrix grand_canonical_state(const HermitianOperator& h, const HermitianOperator& n, double beta,
                                    double mu, Dims dims) {
  const JointSpectrum s = joint_spectrum(h, n);
  return state_from(s.vectors, grand_populations(s.energies, s.particles, beta, beta * mu), std::move(dims));
}

double heat_capacity(const HermitianOperator& h, double beta) {
  const Moments m = moments(h.spectrum().values, nullptr, beta, 0.0);
  return beta * beta * m.var_e;
}

EffectiveTemperature effective_beta(const RealVector& energies, double target_energy) {
  if (energies.size() == 0) throw Error(ErrorCode::InvalidArgument, "empty spectrum");
  if (!std::isfinite(target_energy)) throw Error(ErrorCode::EnergyOutOfRange, "target energy not finite");
  return solve_beta(energies, nullptr, 0.0, target_energy);
}

EffectiveTemperature effective_beta(const HermitianOperator& h, double target_energy) {
  return effective_beta(h.spectrum().values, target_energy);
}

GrandPotentialPoint effective_beta_mu(const HermitianOperator& h, const HermitianOperator& n,
                                      double target_energy, double target_particles) {
  return effective_beta_mu(joint_spectrum(h, n), target_energy, target_particles);
}

GrandPotentialPoint effective_beta_mu(const JointSpectrum& s, double target_energy, double target_particles) {
  const RealVector& e = s.energies;
  const RealVector& n = s.particles;
  GrandPotentialPoint out;
  const double nmin = n.minCoeff();
  const double nmax = n.maxCoeff();
  const double wn = nmax - nmin;

  if (wn <= 1e-12) {
    // No particle-number freedom: only β is meaningful.
    const auto t = effective_beta(e, target_energy);
    out.beta_star = t.beta_star;
    out.residual_energy = t.residual;
    out.residual_particles = nmin - target_particles;
    out.iterations = t.iterations;
    out.solved = !t.saturated && std::abs(out.residual_particles) <= tol::kGrandResidual;
    return out;
  }

  const double we = std::max(e.maxCoeff() - e.minCoeff(), 1e-300);
  const double scale_e = std::max(1.0, we);
  const double scale_n = std::max(1.0, wn);
  auto residuals = [&](double beta, double alpha, Moments* mo = nullptr) {
    const Moments m = moments(e, &n, beta, alpha);
    if (mo) *mo = m;
    return Eigen::Vector2d((m.mean_e - target_energy) / scale_e, (m.mean_n - target_particles) / scale_n);
  };

  // Damped Newton in (β, α = βμ). Jacobian of (⟨E⟩, ⟨N⟩):
  //   [[-Var E, Cov], [-Cov, Var N]]
  double beta = 0.0;
  double alpha = 0.0;
  try {
    beta = effective_beta(e, target_energy).beta_star;
  } catch (const Error&) {
    beta = 0.0;
  }
  const double beta_cap = tol::kBetaMaxScale / we;
  const double alpha_cap = tol::kBetaMaxScale / wn;
  int it = 0;
  bool converged = false;
  Moments m;
  Eigen::Vector2d r = residuals(beta, alpha, &m);
  for (; it < kMaxNewtonIterations; ++it) {
    if (r.norm() <= 1e-14) {
      converged = true;
      break;
    }
    Eigen::Matrix2d j;
    j << -m.var_e / scale_e, m.cov / scale_e, -m.cov / scale_n, m.var_n / scale_n;
    const Eigen::Vector2d step = j.fullPivLu().solve(-r);
    if (!step.allFinite()) break;
    double damp = 1.0;
    bool improved = false;
    for (int ls = 0; ls < 40; ++ls) {
      const double nb = beta + damp * step(0);
      const double na = alpha + damp * step(1);
      if (std::abs(nb) <= beta_cap && std::abs(na) <= alpha_cap) {
        Moments nm;
        const Eigen::Vector2d nr = residuals(nb, na, &nm);
        if (nr.norm() < r.norm()) {
          beta = nb;
          alpha = na;
          r = nr;
          m = nm;
          improved = true;
          break;
        }
      }
      damp *= 0.5;
    }
    if (!improved) break;
  }

  auto accept = [&](double b, double a) {
    const Moments mm = moments(e, &n, b, a);
    return std::abs(mm.mean_e - target_energy) <= tol::kGrandResidual * scale_e &&
           std::abs(mm.mean_n - target_particles) <= tol::kGrandResidual * scale_n;
  };

  if (!(converged || accept(beta, alpha))) {
    // Nested bisection: along the curve ⟨E⟩(β(α), α) = target, ⟨N⟩ is
    // nondecreasing in α (its slope is the Schur complement Var N - Cov²/Var E).
    out.used_fallback = true;
    auto g = [&](double a, double* b_out) {
      const auto t = solve_beta(e, &n, a, target_energy);
      *b_out = t.beta_star;
      return moments(e, &n, t.beta_star, a).mean_n - target_particles;
    };
    double b_lo = 0.0;
    double b_hi = 0.0;
    double lo = -1.0 / wn;
    double hi = 1.0 / wn;
    double glo = g(lo, &b_lo);
    double ghi = g(hi, &b_hi);
    while (glo > 0 && std::abs(lo) < alpha_cap && it < kMaxGrandIterations) {
      lo = std::max(2.0 * lo, -alpha_cap);
      glo = g(lo, &b_lo);
      ++it;
    }
    while (ghi < 0 && std::abs(hi) < alpha_cap && it < kMaxGrandIterations) {
      hi = std::min(2.0 * hi, alpha_cap);
      ghi = g(hi, &b_hi);
      ++it;
    }
    double a = 0.5 * (lo + hi);
    double b = 0.0;
    for (; it < kMaxGrandIterations; ++it) {
      const double ga = g(a, &b);
      if (std::abs(ga) <= 1e-13 * scale_n) break;
      if (ga < 0) lo = a;
      else hi = a;
      a = 0.5 * (lo + hi);
      if (hi - lo <= 4 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(a))) {
        g(a, &b);
        break;
      }
    }
    beta = b;
    alpha = a;
  }

  const Moments fin = moments(e, &n, beta, alpha);
  out.beta_star = beta;
  out.mu_star = std::abs(beta) > 0 ? alpha / beta : 0.0;
  out.residual_energy = fin.mean_e - target_energy;
  out.residual_particles = fin.mean_n - target_particles;
  out.iterations = it;
  out.solved = it < kMaxGrandIterations && std::abs(out.residual_energy) <= tol::kGrandResidual * scale_e &&
               std::abs(out.residual_particles) <= tol::kGrandResidual * scale_n;
  return out;
}

OutcomeDistribution coarse_gibbs_probabilities(const CoarseGraining& x, double beta) {
  RealVector logw(static_cast<Index>(x.size()));
  OutcomeDistribution d;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const auto& label = x.label(k);
    if (label.empty() || label.front().kind != LabelKind::Energy) {
      throw Error(ErrorCode::WrongLabelKind, "coarse Gibbs probabilities need energy-window labels");
    }
    logw(static_cast<Index>(k)) = std::log(static_cast<double>(x.volume(k))) - beta * label.front().value;
    d.labels.push_back(label);
  }
  const RealVector p = normalized_weights(logw);
  d.probabilities.assign(p.data(), p.data() + p.size());
  d.volumes = x.volumes();
  return d;
}

double internal_energy(const ComplexMatrix& h, const ComplexMatrix& rho) {
  if (h.rows() != rho.rows() || h.cols() != rho.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "internal_energy: operator and state dimensions differ");
  }
  const Complex u = trace_product(h, rho);
  if (std::abs(u.imag()) > tol::kImaginary * std::max(1.0, std::abs(u.real()))) {
    std::ostringstream os;
    os << "energy expectation has imaginary part " << u.imag();
    throw Error(ErrorCode::InvalidArgument, os.str());
  }
  return u.real();
}

double internal_energy(const HermitianOperator& h, const DensityMatrix& rho) {
  return internal_energy(h.matrix(), rho.matrix());
}

double internal_energy_open(const HermitianOperator& hs_full, const HermitianOperator& v_sb,
                            const DensityMatrix& rho_sb) {
  if (hs_full.dim() != v_sb.dim()) throw Error(ErrorCode::DimensionMismatch, "H_S and V_SB differ in dimension");
  return internal_energy(ComplexMatrix(hs_full.matrix() + v_sb.matrix()), rho_sb.matrix());
}

std::vector<double> cumulative_work(std::span<const double> times, std::span<const double> power) {
  require_uniform_grid(times, power.size());
  std::vector<double> w(power.size(), 0.0);
  for (std::size_t k = 1; k < power.size(); ++k) {
    w[k] = w[k - 1] + 0.5 * (times[k] - times[k - 1]) * (power[k] + power[k - 1]);
  }
  return w;
}

double work_integral(std::span<const double> times, std::span<const double> power) {
  return cumulative_work(times, power).back();
}

double quench_work(const ComplexMatrix& h_before, const ComplexMatrix& h_after, const ComplexMatrix& rho) {
  return internal_energy(ComplexMatrix(h_after - h_before), rho);
}

double clausius_integral(std::span<const double> beta_star, std::span<const double> energy) {
  if (beta_star.size() != energy.size()) throw Error(ErrorCode::GridMismatch, "beta* and energy series differ in length");
  double acc = 0.0;
  for (std::size_t k = 0; k < beta_star.size(); ++k) {
    if (!std::isfinite(beta_star[k])) throw Error(ErrorCode::SaturatedTemperature, "non-finite beta* in Clausius sum");
    if (k > 0) acc += 0.5 * (beta_star[k] + beta_star[k - 1]) * (energy[k] - energy[k - 1]);
  }
  return acc;
}

double clausius_integral(std::span<const EffectiveTemperature> beta_star, std::span<const double> energy) {
  std::vector<double> b;
  b.reserve(beta_star.size());
  for (const auto& t : beta_star) {
    if (t.saturated) throw Error(ErrorCode::SaturatedTemperature, "saturated beta* in Clausius sum");
    b.push_back(t.beta_star);
  }
  return clausius_integral(b, energy);
}

double clausius_integral_grand(std::span<const double> beta_star, std::span<const double> beta_mu,
                               std::span<const double> energy, std::span<const double> particles) {
  if (beta_mu.size() != beta_star.size() || particles.size() != beta_star.size()) {
    throw Error(ErrorCode::GridMismatch, "grand Clausius series differ in length");
  }
  double acc = clausius_integral(beta_star, energy);
  for (std::size_t k = 1; k < beta_mu.size(); ++k) {
    if (!std::isfinite(beta_mu[k])) throw Error(ErrorCode::SaturatedTemperature, "non-finite beta*mu*");
    acc -= 0.5 * (beta_mu[k] + beta_mu[k - 1]) * (particles[k] - particles[k - 1]);
  }
  return acc;
}

double chemical_work_increment(std::span<const double> mu_star, std::span<const double> dN) {
  if (mu_star.size() != dN.size()) throw Error(ErrorCode::LengthMismatch, "one particle change per bath required");
  double w = 0.0;
  for (std::size_t k = 0; k < mu_star.size(); ++k) w += mu_star[k] * dN[k];
  return w;
}

PerturbationScale perturbation_scale(const OutcomeDistribution& p_now, const OutcomeDistribution& p_init) {
  if (p_now.size() != p_init.size() || p_now.labels != p_init.labels) {
    throw Error(ErrorCode::SupportMismatch, "distributions are over different outcome sets");
  }
  std::vector<double> dev(p_now.size());
  PerturbationScale out;
  for (std::size_t x = 0; x < p_now.size(); ++x) {
    if (!(p_init.probabilities[x] > tol::kZeroProbability)) {
      throw Error(ErrorCode::SupportMismatch, "reference distribution has a zero entry");
    }
    dev[x] = p_now.probabilities[x] / p_init.probabilities[x] - 1.0;
    out.epsilon = std::max(out.epsilon, std::abs(dev[x]));
  }
  out.q.assign(dev.size(), 0.0);
  if (out.epsilon > 0) {
    for (std::size_t x = 0; x < dev.size(); ++x) out.q[x] = dev[x] / out.epsilon;
  }
  return out;
}

}  // namespace obsent
