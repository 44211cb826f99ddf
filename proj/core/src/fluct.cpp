#include "obsent/fluct.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "obsent/entropy.hpp"
#include "obsent/errors.hpp"
#include "obsent/thermo.hpp"
#include "obsent/tolerances.hpp"

namespace obsent {

namespace {

// Relative error of the per-value ratio is only meaningful above this mass;
// below it the central relation (absolute) covers the pair.
constexpr double kRatioFloor = 1e-12;

// Σ_{i∈block a, j∈block b} m(i, j) for every pair of outcomes.
Eigen::MatrixXd block_sums(const Eigen::MatrixXd& m, const CoarseGraining& rows, const CoarseGraining& cols) {
  Eigen::MatrixXd out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  for (std::size_t a = 0; a < rows.size(); ++a) {
    for (std::size_t b = 0; b < cols.size(); ++b) {
      out(static_cast<Index>(a), static_cast<Index>(b)) =
          m.block(rows.offset(a), cols.offset(b), rows.volume(a), cols.volume(b)).sum();
    }
  }
  return out;
}

bool same_key(double a, double b) { return std::abs(a - b) <= tol::kFtKey * std::max(1.0, std::abs(a)); }

}  // namespace

double TwoPointDistribution::mean_delta_s() const {
  double m = 0.0;
  for (const auto& e : entries) m += e.probability * e.delta_s;
  return m;
}

TwoPointDistribution forward_two_point(const DensityMatrix& rho0, const Propagator& u, const CoarseGraining& x0,
                                       const CoarseGraining& xt) {
  const Index d = rho0.dim();
  if (x0.dim() != d || xt.dim() != d || u.matrix.rows() != d || u.matrix.cols() != d) {
    throw Error(ErrorCode::DimensionMismatch, "two-point measurement: state, propagator and grainings differ in size");
  }
  TwoPointDistribution out;
  out.direction = Direction::Forward;
  out.x0 = std::make_shared<const CoarseGraining>(x0);
  out.xt = std::make_shared<const CoarseGraining>(xt);
  out.p_initial = outcome_probabilities(rho0.matrix(), x0);
  const ComplexMatrix rho_t = u.matrix * rho0.matrix() * u.matrix.adjoint();
  out.p_final = outcome_probabilities(rho_t, xt);

  const ComplexMatrix t = xt.frame().adjoint() * u.matrix * x0.frame();
  const ComplexMatrix r0 = x0.frame().adjoint() * rho0.matrix() * x0.frame();
  for (std::size_t a = 0; a < x0.size(); ++a) {
    const Index off = x0.offset(a);
    const Index v = x0.volume(a);
    const auto tc = t.middleCols(off, v);
    const ComplexMatrix y = tc * r0.block(off, off, v, v);
    const RealVector rows = y.cwiseProduct(tc.conjugate()).rowwise().sum().real();
    const bool zero_initial = out.p_initial[a] <= tol::kZeroProbability;
    if (zero_initial) out.zero_probability_outcome = true;
    for (std::size_t b = 0; b < xt.size(); ++b) {
      const double p = rows.segment(xt.offset(b), xt.volume(b)).sum();
      out.total_probability += p;
      if (zero_initial) continue;
      if (out.p_final[b] <= tol::kZeroProbability) {
        if (p > tol::kZeroProbability) out.zero_probability_outcome = true;
        continue;
      }
      const double ds = std::log(out.p_initial[a] * static_cast<double>(xt.volume(b)) /
                                 (static_cast<double>(v) * out.p_final[b]));
      out.entries.push_back({a, b, p, ds});
    }
  }
  return out;
}

TwoPointDistribution reversed_two_point(const TwoPointDistribution& fwd, const ComplexMatrix& u_theta) {
  if (!fwd.x0 || !fwd.xt) throw Error(ErrorCode::InvalidArgument, "forward distribution has no grainings");
  const CoarseGraining& x0 = *fwd.x0;
  const CoarseGraining& xt = *fwd.xt;
  if (u_theta.rows() != x0.dim() || u_theta.cols() != x0.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "reversed propagator has the wrong size");
  }
  // Π^Θ_x has basis conj(B_x); T(i, j) = ⟨conj b0_i| U_Θ |conj bt_j⟩.
  const ComplexMatrix t = x0.frame().transpose() * u_theta * xt.frame().conjugate();
  const Eigen::MatrixXd g = block_sums(t.cwiseAbs2(), x0, xt);

  TwoPointDistribution rev;
  rev.direction = Direction::Reversed;
  rev.x0 = fwd.x0;
  rev.xt = fwd.xt;
  rev.p_initial = fwd.p_final;  // reversed process starts from p_{x_t}(t)
  rev.p_final.assign(x0.size(), 0.0);
  for (std::size_t a = 0; a < x0.size(); ++a) {
    for (std::size_t b = 0; b < xt.size(); ++b) {
      const double p = fwd.p_final[b] / static_cast<double>(xt.volume(b)) * g(static_cast<Index>(a), static_cast<Index>(b));
      rev.p_final[a] += p;
      rev.total_probability += p;
    }
  }
  rev.zero_probability_outcome = fwd.zero_probability_outcome;
  rev.entries.reserve(fwd.entries.size());
  for (const auto& e : fwd.entries) {
    const double p = fwd.p_final[e.xt] / static_cast<double>(xt.volume(e.xt)) *
                     g(static_cast<Index>(e.x0), static_cast<Index>(e.xt));
    rev.entries.push_back({e.x0, e.xt, p, e.delta_s});
  }
  return rev;
}

TwoPointDistribution reversed_two_point(const TwoPointDistribution& fwd, const Protocol& p) {
  return reversed_two_point(fwd, trotter_propagator(reversed_protocol(p)).matrix);
}

IftResult ift_average(const TwoPointDistribution& d) {
  IftResult r;
  for (const auto& e : d.entries) r.value += e.probability * std::exp(-e.delta_s);
  r.precondition_violated = d.zero_probability_outcome;
  return r;
}

double central_relation_check(const TwoPointDistribution& fwd, const TwoPointDistribution& rev) {
  if (fwd.entries.size() != rev.entries.size() || fwd.x0 != rev.x0 || fwd.xt != rev.xt) {
    throw Error(ErrorCode::LabelMismatch, "forward and reversed outcome sets differ");
  }
  double r = 0.0;
  for (std::size_t k = 0; k < fwd.entries.size(); ++k) {
    const auto& f = fwd.entries[k];
    const auto& b = rev.entries[k];
    if (f.x0 != b.x0 || f.xt != b.xt) throw Error(ErrorCode::LabelMismatch, "forward and reversed pairs differ");
    r = std::max(r, std::abs(f.probability - std::exp(f.delta_s) * b.probability));
  }
  return r;
}

DetailedFt detailed_ft_histograms(const TwoPointDistribution& fwd, const TwoPointDistribution& rev,
                                  std::size_t bins) {
  central_relation_check(fwd, rev);  // validates alignment
  DetailedFt out;
  // Pairs that never occur carry an arbitrary Δs; they get no row.
  std::vector<std::size_t> order;
  for (std::size_t k = 0; k < fwd.entries.size(); ++k) {
    if (std::max(fwd.entries[k].probability, rev.entries[k].probability) > tol::kZeroProbability) order.push_back(k);
  }
  const std::size_t n = order.size();
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return fwd.entries[a].delta_s < fwd.entries[b].delta_s; });
  for (std::size_t i = 0; i < n;) {
    const double key = fwd.entries[order[i]].delta_s;
    FtRow row;
    row.delta_s = key;
    std::size_t j = i;
    while (j < n && same_key(key, fwd.entries[order[j]].delta_s)) {
      row.p_forward += fwd.entries[order[j]].probability;
      row.q_reversed += rev.entries[order[j]].probability;
      ++j;
    }
    row.expected_ratio = std::exp(key);
    row.ratio = row.q_reversed > 0.0 ? row.p_forward / row.q_reversed : std::numeric_limits<double>::quiet_NaN();
    if (std::max(row.p_forward, row.expected_ratio * row.q_reversed) > kRatioFloor) {
      const double rel = row.q_reversed > 0.0 ? std::abs(row.ratio / row.expected_ratio - 1.0)
                                              : std::numeric_limits<double>::infinity();
      out.max_relative_error = std::max(out.max_relative_error, rel);
    }
    out.rows.push_back(row);
    i = j;
  }

  for (std::size_t a = 0; a < fwd.p_initial.size(); ++a) {
    out.equal_initial_residual = std::max(out.equal_initial_residual, std::abs(fwd.p_initial[a] - rev.p_final[a]));
  }
  out.equal_initial = out.equal_initial_residual <= tol::kFloatSlack;

  // Reversed-process entropy changes from its own marginals.
  std::vector<std::pair<double, double>> tr;  // (Δs_tr, p)
  for (const auto& e : rev.entries) {
    const double pa = rev.p_final[e.x0];
    if (pa <= tol::kZeroProbability) continue;
    const double ds = std::log(rev.p_initial[e.xt] * static_cast<double>(fwd.x0->volume(e.x0)) /
                               (static_cast<double>(fwd.xt->volume(e.xt)) * pa));
    tr.emplace_back(ds, e.probability);
  }
  for (const auto& row : out.rows) {
    double p_tr = 0.0;
    for (const auto& [ds, p] : tr) {
      if (same_key(-row.delta_s, ds)) p_tr += p;
    }
    if (std::max(row.p_forward, row.expected_ratio * p_tr) > kRatioFloor) {
      const double rel = p_tr > 0.0 ? std::abs(row.p_forward / (row.expected_ratio * p_tr) - 1.0)
                                    : std::numeric_limits<double>::infinity();
      out.max_relative_error_tr = std::max(out.max_relative_error_tr, rel);
    }
  }

  if (bins > 0 && !out.rows.empty()) {
    const double lo = out.rows.front().delta_s;
    const double hi = out.rows.back().delta_s;
    const double w = hi > lo ? (hi - lo) / static_cast<double>(bins) : 1.0;
    out.bins.resize(bins);
    for (std::size_t b = 0; b < bins; ++b) {
      out.bins[b].lower = lo + w * static_cast<double>(b);
      out.bins[b].upper = lo + w * static_cast<double>(b + 1);
    }
    for (const auto& row : out.rows) {
      const auto b = std::min(bins - 1, static_cast<std::size_t>((row.delta_s - lo) / w));
      out.bins[b].p_forward += row.p_forward;
      out.bins[b].q_reversed += row.q_reversed;
    }
  }
  return out;
}

FluctuationResult run_fluctuation(const BuiltModel& model, const RunSettings& s,
                                  std::vector<double> system_populations, double coherence, std::size_t bins) {
  if (s.betas.size() != model.bath_count()) throw Error(ErrorCode::LengthMismatch, "betas needs one entry per bath");
  if (s.steps < 1 || !(s.t_max > 0)) throw Error(ErrorCode::InvalidArgument, "invalid time grid");
  if (!(s.delta > 0)) throw Error(ErrorCode::InvalidArgument, "delta must be positive");
  const Protocol protocol = model.protocol(s.t_max, s.steps);
  const Dims& dims = model.dims();
  const Index ds = dims[0];

  auto graining_at = [&](double eps) {
    const HermitianOperator hs(model.system_static() + eps * model.system_drive());
    std::vector<CoarseGraining> parts{rank1_graining(hs.spectrum().vectors)};
    for (std::size_t nu = 0; nu < model.bath_count(); ++nu) {
      parts.push_back(energy_graining(model.bath_hamiltonian(nu), s.delta, s.anchor));
    }
    return product_graining(parts, dims);
  };
  const double eps0 = model.epsilon(0.0);
  const CoarseGraining x0 = graining_at(eps0);
  const CoarseGraining xt = graining_at(model.epsilon(s.t_max));

  const HermitianOperator hs0(model.system_static() + eps0 * model.system_drive());
  if (system_populations.empty()) {
    const RealVector g = gibbs_populations(hs0.spectrum().values, s.betas.front());
    system_populations.assign(g.data(), g.data() + g.size());
  }
  if (system_populations.size() != static_cast<std::size_t>(ds)) {
    throw Error(ErrorCode::LengthMismatch, "one population per system level required");
  }
  ComplexMatrix diag = ComplexMatrix::Zero(ds, ds);
  for (Index i = 0; i < ds; ++i) diag(i, i) = system_populations[static_cast<std::size_t>(i)];
  if (coherence != 0.0 && ds >= 2) {
    diag(0, 1) = coherence;
    diag(1, 0) = coherence;
  }
  const ComplexMatrix& v = hs0.spectrum().vectors;
  ComplexMatrix rho = v * diag * v.adjoint();
  for (std::size_t nu = 0; nu < model.bath_count(); ++nu) {
    rho = kron(rho, coarse_gibbs_state(model.bath_hamiltonian(nu), s.betas[nu], s.delta, s.anchor).matrix());
  }
  const DensityMatrix rho0(rho, dims);

  FluctuationResult r;
  const auto mem = is_equilibrium_member(rho0, x0, tol::kNormalizedLoose);
  r.initial_member = mem.member;
  r.initial_residual = mem.residual;

  const Propagator u = trotter_propagator(protocol);
  r.forward = forward_two_point(rho0, u, x0, xt);
  r.reversed = reversed_two_point(r.forward, protocol);
  r.ift = ift_average(r.forward);
  if (!r.initial_member) r.ift.precondition_violated = true;
  r.central_residual = central_relation_check(r.forward, r.reversed);
  r.mean_delta_s = r.forward.mean_delta_s();
  r.delta_S_obs = obs_entropy(evolve(rho0, u), xt) - obs_entropy(rho0, x0);
  r.detailed = detailed_ft_histograms(r.forward, r.reversed, bins);
  return r;
}

}  // namespace obsent
