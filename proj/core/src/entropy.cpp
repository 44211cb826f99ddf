#include "obsent/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "obsent/errors.hpp"
#include "obsent/tolerances.hpp"

namespace obsent {

namespace {

double xlogx(double p) { return p > tol::kZeroProbability ? p * std::log(p) : 0.0; }

void require_normalized(std::span<const double> p, double tolerance, const char* what) {
  double total = 0.0;
  for (double v : p) {
    if (v < -tol::kNegativeClamp || !std::isfinite(v)) {
      std::ostringstream os;
      os << what << ": invalid probability " << v;
      throw Error(ErrorCode::NotNormalized, os.str());
    }
    total += v;
  }
  if (std::abs(total - 1.0) > tolerance) {
    std::ostringstream os;
    os << what << ": probabilities sum to " << total;
    throw Error(ErrorCode::NotNormalized, os.str());
  }
}

}  // namespace

std::vector<double> ProbabilityTable::marginal(std::size_t axis) const {
  if (axis >= shape.size()) throw Error(ErrorCode::DimensionMismatch, "marginal: axis out of range");
  std::size_t inner = 1;
  for (std::size_t k = axis + 1; k < shape.size(); ++k) inner *= shape[k];
  std::vector<double> m(shape[axis], 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) m[(i / inner) % shape[axis]] += p[i];
  return m;
}

double shannon(std::span<const double> p) {
  require_normalized(p, tol::kNormalizedLoose, "shannon");
  double s = 0.0;
  for (double v : p) s -= xlogx(v);
  return s;
}

double vn_entropy_of_spectrum(const RealVector& eigenvalues) {
  double s = 0.0;
  for (Index i = 0; i < eigenvalues.size(); ++i) s -= xlogx(eigenvalues(i));
  return s;
}

double vn_entropy(const DensityMatrix& rho) { return vn_entropy_of_spectrum(rho.spectrum().values); }

double obs_entropy(std::span<const double> p, std::span<const Index> volumes) {
  if (p.size() != volumes.size()) throw Error(ErrorCode::LengthMismatch, "obs_entropy: size mismatch");
  double s = 0.0;
  for (std::size_t x = 0; x < p.size(); ++x) {
    if (p[x] > tol::kZeroProbability) s += p[x] * (-std::log(p[x]) + std::log(static_cast<double>(volumes[x])));
  }
  return s;
}

double obs_entropy(const DensityMatrix& rho, const CoarseGraining& x) {
  const auto p = outcome_probabilities(rho.matrix(), x);
  const auto v = x.volumes();
  return obs_entropy(p, v);
}

double obs_entropy_shannon_form(const OutcomeDistribution& d) {
  if (d.probabilities.size() != d.volumes.size()) {
    throw Error(ErrorCode::LengthMismatch, "distribution and volume lists differ in length");
  }
  const double sh = shannon(d.probabilities);
  double boltzmann = 0.0;
  for (std::size_t x = 0; x < d.size(); ++x) {
    boltzmann += d.probabilities[x] * std::log(static_cast<double>(d.volumes[x]));
  }
  return sh + boltzmann;
}

double boltzmann_entropy(const CoarseGraining& x, const OutcomeLabel& label) {
  return std::log(static_cast<double>(x.volume(x.index_of(label))));
}

double relative_entropy(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw Error(ErrorCode::LengthMismatch, "relative_entropy: size mismatch");
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= tol::kZeroProbability) continue;
    if (q[i] <= tol::kZeroProbability) {
      if (p[i] > tol::kSupport) throw Error(ErrorCode::InfiniteDivergence, "support of p not contained in support of q");
      continue;
    }
    d += p[i] * (std::log(p[i]) - std::log(q[i]));
  }
  return d;
}

double relative_entropy(const DensityMatrix& rho, const DensityMatrix& sigma) {
  if (rho.dim() != sigma.dim()) throw Error(ErrorCode::DimensionMismatch, "relative_entropy: dimensions differ");
  const Spectrum& r = rho.spectrum();
  const Spectrum& s = sigma.spectrum();
  // weights(i, j) = |<r_i|s_j>|^2
  const Eigen::MatrixXd overlap = (r.vectors.adjoint() * s.vectors).cwiseAbs2();
  double cross = 0.0;
  for (Index j = 0; j < s.values.size(); ++j) {
    double mass = 0.0;
    for (Index i = 0; i < r.values.size(); ++i) mass += std::max(r.values(i), 0.0) * overlap(i, j);
    if (s.values(j) <= tol::kZeroProbability) {
      if (mass > tol::kSupport) {
        std::ostringstream os;
        os << "state has weight " << mass << " outside the support of the reference state";
        throw Error(ErrorCode::InfiniteDivergence, os.str());
      }
      continue;
    }
    cross += mass * std::log(s.values(j));
  }
  double self = 0.0;
  for (Index i = 0; i < r.values.size(); ++i) self += xlogx(r.values(i));
  return self - cross;
}

double mutual_information_classical(const Eigen::MatrixXd& joint) {
  std::vector<double> flat(joint.data(), joint.data() + joint.size());
  require_normalized(flat, tol::kNormalizedLoose, "mutual_information_classical");
  std::vector<double> px(static_cast<std::size_t>(joint.rows()));
  std::vector<double> py(static_cast<std::size_t>(joint.cols()));
  for (Index i = 0; i < joint.rows(); ++i) px[static_cast<std::size_t>(i)] = joint.row(i).sum();
  for (Index j = 0; j < joint.cols(); ++j) py[static_cast<std::size_t>(j)] = joint.col(j).sum();
  return shannon(px) + shannon(py) - shannon(flat);
}

double mutual_information_quantum(const DensityMatrix& rho, std::span<const std::size_t> first_party) {
  const std::size_t n = rho.dims().size();
  std::vector<std::size_t> rest;
  for (std::size_t k = 0; k < n; ++k) {
    if (std::find(first_party.begin(), first_party.end(), k) == first_party.end()) rest.push_back(k);
  }
  if (first_party.empty() || rest.empty()) {
    throw Error(ErrorCode::DimensionMismatch, "mutual_information_quantum: bipartition must be proper");
  }
  const DensityMatrix a = partial_trace(rho, first_party);
  const DensityMatrix b = partial_trace(rho, rest);
  return vn_entropy(a) + vn_entropy(b) - vn_entropy(rho);
}

double total_information(const ProbabilityTable& joint) {
  std::size_t n = 1;
  for (auto s : joint.shape) n *= s;
  if (n != joint.p.size()) throw Error(ErrorCode::DimensionMismatch, "total_information: shape does not match data");
  require_normalized(joint.p, tol::kNormalizedLoose, "total_information");
  double sum = 0.0;
  for (std::size_t k = 0; k < joint.shape.size(); ++k) sum += shannon(joint.marginal(k));
  return sum - shannon(joint.p);
}

EntropyDecomposition decompose_obs_entropy(const DensityMatrix& rho, const CoarseGraining& x) {
  if (rho.dim() != x.dim()) throw Error(ErrorCode::DimensionMismatch, "decompose_obs_entropy: dimensions differ");
  EntropyDecomposition out;
  out.per_outcome_relative.assign(x.size(), 0.0);
  // Σ_x p_x ρ(x) is block diagonal, so its entropy is the sum over blocks of
  // -tr{B ln B} with B = b† ρ b.
  for (std::size_t k = 0; k < x.size(); ++k) {
    const auto& b = x.basis(k);
    const ComplexMatrix block = b.adjoint() * rho.matrix() * b;
    const double pk = block.trace().real();
    if (pk <= tol::kZeroProbability) continue;
    const Spectrum s = eig_hermitian(ComplexMatrix(0.5 * (block + block.adjoint())));
    double block_entropy = 0.0;
    double normalized_entropy = 0.0;
    for (Index i = 0; i < s.values.size(); ++i) {
      const double v = std::max(s.values(i), 0.0);
      block_entropy -= xlogx(v);
      normalized_entropy -= xlogx(v / pk);
    }
    out.dephased_vn += block_entropy;
    // D[ρ(x) || Π_x/V_x] = ln V_x - S_vN[ρ(x)]
    const double rel = std::log(static_cast<double>(x.volume(k))) - normalized_entropy;
    out.per_outcome_relative[k] = rel;
    out.avg_relative += pk * rel;
  }
  return out;
}

DensityMatrix microcanonical_state(const CoarseGraining& x, std::size_t outcome) {
  if (outcome >= x.size()) throw Error(ErrorCode::UnknownOutcome, "outcome index out of range");
  return DensityMatrix::trusted(x.projector(outcome) / static_cast<double>(x.volume(outcome)), Dims{x.dim()});
}

DensityMatrix microcanonical_state(const CoarseGraining& x, const OutcomeLabel& label) {
  return microcanonical_state(x, x.index_of(label));
}

ComplexMatrix block_uniform_state(const CoarseGraining& x, std::span<const double> p) {
  if (p.size() != x.size()) throw Error(ErrorCode::LengthMismatch, "one weight per outcome required");
  // frame * diag(p_x / V_x repeated) * frame†
  RealVector w(x.dim());
  for (std::size_t k = 0; k < x.size(); ++k) {
    w.segment(x.offset(k), x.volume(k)).setConstant(p[k] / static_cast<double>(x.volume(k)));
  }
  return x.frame() * w.cast<Complex>().asDiagonal() * x.frame().adjoint();
}

MembershipResult is_equilibrium_member(const DensityMatrix& rho, const CoarseGraining& x, double tolerance) {
  const auto p = outcome_probabilities(rho.matrix(), x);
  const double residual = max_abs(rho.matrix() - block_uniform_state(x, p));
  return {residual <= tolerance, residual};
}

}  // namespace obsent
