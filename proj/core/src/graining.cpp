#include "obsent/graining.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "obsent/errors.hpp"
#include "obsent/tolerances.hpp"

namespace obsent {

std::string to_string(const OutcomeLabel& label) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < label.size(); ++i) {
    if (i) os << ',';
    switch (label[i].kind) {
      case LabelKind::Energy: os << "E=" << label[i].value; break;
      case LabelKind::Index: os << "s=" << label[i].value; break;
      case LabelKind::Particles: os << "N=" << label[i].value; break;
      case LabelKind::Whole: os << '1'; break;
    }
  }
  os << ')';
  return os.str();
}

CoarseGraining::CoarseGraining(std::vector<Outcome> outcomes, Index dim)
    : outcomes_(std::move(outcomes)), dim_(dim) {
  if (outcomes_.empty()) throw Error(ErrorCode::InvalidArgument, "coarse-graining without outcomes");
  Index total = 0;
  for (const auto& o : outcomes_) {
    if (o.basis.rows() != dim_) {
      throw Error(ErrorCode::DimensionMismatch, "outcome basis has the wrong row count");
    }
    if (o.basis.cols() == 0) throw Error(ErrorCode::InvalidArgument, "outcome with zero volume");
    offsets_.push_back(total);
    total += o.basis.cols();
  }
  if (total != dim_) {
    std::ostringstream os;
    os << "volumes sum to " << total << " but the space has dimension " << dim_;
    throw Error(ErrorCode::NotOrthonormal, os.str());
  }
  frame_.resize(dim_, dim_);
  for (std::size_t x = 0; x < outcomes_.size(); ++x) {
    frame_.middleCols(offsets_[x], outcomes_[x].basis.cols()) = outcomes_[x].basis;
  }
  // A square frame with orthonormal columns gives Σ Π_x = 1 and Π_x Π_x' = δ Π_x.
  const double dev = max_abs(frame_.adjoint() * frame_ - ComplexMatrix::Identity(dim_, dim_));
  if (dev > tol::kProjector) {
    std::ostringstream os;
    os << "projectors are not complete and orthogonal (deviation " << dev << ")";
    throw Error(ErrorCode::NotOrthonormal, os.str());
  }
}

std::vector<Index> CoarseGraining::volumes() const {
  std::vector<Index> v;
  v.reserve(outcomes_.size());
  for (const auto& o : outcomes_) v.push_back(o.basis.cols());
  return v;
}

ComplexMatrix CoarseGraining::projector(std::size_t x) const {
  const auto& b = basis(x);
  return b * b.adjoint();
}

std::optional<std::size_t> CoarseGraining::find(const OutcomeLabel& label) const {
  for (std::size_t x = 0; x < outcomes_.size(); ++x) {
    if (outcomes_[x].label == label) return x;
  }
  return std::nullopt;
}

std::size_t CoarseGraining::index_of(const OutcomeLabel& label) const {
  if (auto x = find(label)) return *x;
  throw Error(ErrorCode::UnknownOutcome, "no outcome labelled " + to_string(label));
}

namespace {

std::int64_t window_index(double e, double anchor, double delta) {
  return static_cast<std::int64_t>(std::floor((e - anchor + tol::kBinEdge) / delta));
}

// Bins the columns of `vectors` by `values` into energy windows, keyed by
// (window, particle count).
void bin_by_energy(const RealVector& values, const ComplexMatrix& vectors, double anchor,
                   double delta,
                   std::map<std::pair<std::int64_t, double>, std::vector<Index>>& bins,
                   std::vector<ComplexVector>& columns, double suffix_key) {
  for (Index i = 0; i < values.size(); ++i) {
    const auto k = window_index(values(i), anchor, delta);
    bins[{k, suffix_key}].push_back(static_cast<Index>(columns.size()));
    columns.push_back(vectors.col(i));
  }
}

std::vector<CoarseGraining::Outcome> assemble(
    const std::map<std::pair<std::int64_t, double>, std::vector<Index>>& bins,
    const std::vector<ComplexVector>& columns, Index dim, double anchor, double delta,
    bool with_particles) {
  std::vector<CoarseGraining::Outcome> outcomes;
  for (const auto& [key, members] : bins) {
    ComplexMatrix b(dim, static_cast<Index>(members.size()));
    for (std::size_t j = 0; j < members.size(); ++j) {
      b.col(static_cast<Index>(j)) = columns[static_cast<std::size_t>(members[j])];
    }
    OutcomeLabel label{{LabelKind::Energy, anchor + static_cast<double>(key.first) * delta}};
    if (with_particles) label.push_back({LabelKind::Particles, key.second});
    outcomes.push_back({std::move(label), std::move(b)});
  }
  return outcomes;
}

void require_delta(double delta) {
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    throw Error(ErrorCode::InvalidArgument, "energy window width delta must be positive");
  }
}

}  // namespace

CoarseGraining energy_graining(const HermitianOperator& h, double delta, std::optional<double> anchor) {
  require_delta(delta);
  const Spectrum& s = h.spectrum();
  const double a = anchor.value_or(s.values(0));
  std::map<std::pair<std::int64_t, double>, std::vector<Index>> bins;
  std::vector<ComplexVector> columns;
  bin_by_energy(s.values, s.vectors, a, delta, bins, columns, 0.0);
  return CoarseGraining(assemble(bins, columns, h.dim(), a, delta, false), h.dim());
}

CoarseGraining rank1_graining(const ComplexMatrix& basis) {
  if (basis.rows() != basis.cols()) {
    throw Error(ErrorCode::NotOrthonormal, "rank-1 basis must be complete (square)");
  }
  const double dev = max_abs(basis.adjoint() * basis - ComplexMatrix::Identity(basis.cols(), basis.cols()));
  if (dev > tol::kOrthonormal) {
    std::ostringstream os;
    os << "basis Gram matrix deviates from identity by " << dev;
    throw Error(ErrorCode::NotOrthonormal, os.str());
  }
  std::vector<CoarseGraining::Outcome> outcomes;
  for (Index i = 0; i < basis.cols(); ++i) {
    outcomes.push_back({{{LabelKind::Index, static_cast<double>(i)}}, basis.col(i)});
  }
  return CoarseGraining(std::move(outcomes), basis.rows());
}

CoarseGraining rank1_graining(std::span<const ComplexVector> basis) {
  if (basis.empty()) throw Error(ErrorCode::NotOrthonormal, "empty basis");
  ComplexMatrix m(basis.front().size(), static_cast<Index>(basis.size()));
  for (std::size_t i = 0; i < basis.size(); ++i) {
    if (basis[i].size() != m.rows()) throw Error(ErrorCode::DimensionMismatch, "basis vectors differ in length");
    m.col(static_cast<Index>(i)) = basis[i];
  }
  return rank1_graining(m);
}

CoarseGraining identity_graining(Index dim) {
  std::vector<CoarseGraining::Outcome> outcomes;
  outcomes.push_back({{{LabelKind::Whole, 0.0}}, ComplexMatrix::Identity(dim, dim)});
  return CoarseGraining(std::move(outcomes), dim);
}

CoarseGraining product_graining(std::span<const CoarseGraining> parts, const Dims& dims) {
  if (parts.size() != dims.size()) {
    throw Error(ErrorCode::DimensionMismatch, "product_graining: one factor dimension per part required");
  }
  for (std::size_t k = 0; k < parts.size(); ++k) {
    if (parts[k].dim() != dims[k]) {
      throw Error(ErrorCode::DimensionMismatch, "product_graining: part dimension does not match factor");
    }
  }
  return product_graining(parts);
}

CoarseGraining product_graining(std::span<const CoarseGraining> parts) {
  if (parts.empty()) throw Error(ErrorCode::InvalidArgument, "product_graining: no parts");
  std::vector<CoarseGraining::Outcome> acc;
  for (std::size_t x = 0; x < parts[0].size(); ++x) acc.push_back({parts[0].label(x), parts[0].basis(x)});
  Index dim = parts[0].dim();
  for (std::size_t k = 1; k < parts.size(); ++k) {
    std::vector<CoarseGraining::Outcome> next;
    next.reserve(acc.size() * parts[k].size());
    for (const auto& a : acc) {
      for (std::size_t y = 0; y < parts[k].size(); ++y) {
        OutcomeLabel label = a.label;
        const auto& extra = parts[k].label(y);
        label.insert(label.end(), extra.begin(), extra.end());
        next.push_back({std::move(label), kron(a.basis, parts[k].basis(y))});
      }
    }
    acc = std::move(next);
    dim *= parts[k].dim();
  }
  return CoarseGraining(std::move(acc), dim);
}

CoarseGraining energy_particle_graining(const HermitianOperator& h, const HermitianOperator& n,
                                        double delta, std::optional<double> anchor) {
  require_delta(delta);
  if (h.dim() != n.dim()) throw Error(ErrorCode::DimensionMismatch, "h and n differ in dimension");
  const double c = commutator_norm(h.matrix(), n.matrix());
  if (c > tol::kCommute) {
    std::ostringstream os;
    os << "energy and particle number do not commute (max|[H,N]| = " << c << ")";
    throw Error(ErrorCode::NonCommuting, os.str());
  }
  const double a = anchor.value_or(h.min_eigenvalue());

  // Split into particle-number sectors, then diagonalize h inside each sector.
  const Spectrum& ns = n.spectrum();
  std::map<std::pair<std::int64_t, double>, std::vector<Index>> bins;
  std::vector<ComplexVector> columns;
  Index start = 0;
  while (start < ns.values.size()) {
    Index stop = start + 1;
    while (stop < ns.values.size() && ns.values(stop) - ns.values(start) <= tol::kDegenerate) ++stop;
    const ComplexMatrix sector = ns.vectors.middleCols(start, stop - start);
    const double count = std::round(ns.values(start) * 1e9) / 1e9;
    const ComplexMatrix hs = sector.adjoint() * h.matrix() * sector;
    const Spectrum local = eig_hermitian(ComplexMatrix(0.5 * (hs + hs.adjoint())));
    bin_by_energy(local.values, sector * local.vectors, a, delta, bins, columns, count);
    start = stop;
  }
  return CoarseGraining(assemble(bins, columns, h.dim(), a, delta, true), h.dim());
}

std::vector<double> outcome_probabilities(const ComplexMatrix& rho, const CoarseGraining& x) {
  if (rho.rows() != x.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "outcome_distribution: state and graining dimensions differ");
  }
  const RealVector diag = sandwich_diagonal(rho, x.frame());
  std::vector<double> p(x.size(), 0.0);
  double total = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    double acc = diag.segment(x.offset(k), x.volume(k)).sum();
    if (acc < -tol::kPositivity) {
      std::ostringstream os;
      os << "negative outcome probability " << acc;
      throw Error(ErrorCode::InvalidArgument, os.str());
    }
    if (acc < 0.0) acc = 0.0;
    p[k] = acc;
    total += acc;
  }
  if (std::abs(total - 1.0) > tol::kNormalized) {
    std::ostringstream os;
    os << "outcome probabilities sum to " << total;
    throw Error(ErrorCode::NotNormalized, os.str());
  }
  for (double& v : p) v /= total;
  return p;
}

OutcomeDistribution outcome_distribution(const DensityMatrix& rho, const CoarseGraining& x) {
  OutcomeDistribution d;
  d.probabilities = outcome_probabilities(rho.matrix(), x);
  d.volumes = x.volumes();
  d.labels.reserve(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) d.labels.push_back(x.label(k));
  return d;
}

}  // namespace obsent
