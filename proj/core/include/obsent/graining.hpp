#pragma once

// Coarse-grainings: complete families of mutually orthogonal projectors
// {Π_x}, each stored as an orthonormal column block in the reference basis.

#include <compare>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "obsent/linalg.hpp"

namespace obsent {

enum class LabelKind { Energy, Index, Particles, Whole };

struct LabelPart {
  LabelKind kind;
  double value;  // window lower edge, basis index, particle count, or 0

  auto operator<=>(const LabelPart&) const = default;
};

/// A single label for simple grainings, a tuple for product grainings.
using OutcomeLabel = std::vector<LabelPart>;

std::string to_string(const OutcomeLabel& label);

class CoarseGraining {
 public:
  struct Outcome {
    OutcomeLabel label;
    ComplexMatrix basis;  // dim x V, orthonormal columns spanning Π_x
  };

  /// Validates completeness and orthogonality: the concatenated bases must
  /// form a unitary frame to 1e-10.
  CoarseGraining(std::vector<Outcome> outcomes, Index dim);

  std::size_t size() const noexcept { return outcomes_.size(); }
  Index dim() const noexcept { return dim_; }

  const OutcomeLabel& label(std::size_t x) const { return outcomes_.at(x).label; }
  const ComplexMatrix& basis(std::size_t x) const { return outcomes_.at(x).basis; }
  Index volume(std::size_t x) const { return outcomes_.at(x).basis.cols(); }
  std::vector<Index> volumes() const;
  ComplexMatrix projector(std::size_t x) const;

  /// Columns of all outcome bases side by side; outcome x occupies columns
  /// [offset(x), offset(x) + volume(x)).
  const ComplexMatrix& frame() const noexcept { return frame_; }
  Index offset(std::size_t x) const { return offsets_.at(x); }

  std::optional<std::size_t> find(const OutcomeLabel& label) const;
  std::size_t index_of(const OutcomeLabel& label) const;  // throws UnknownOutcome

 private:
  std::vector<Outcome> outcomes_;
  Index dim_;
  ComplexMatrix frame_;
  std::vector<Index> offsets_;
};

struct OutcomeDistribution {
  std::vector<double> probabilities;
  std::vector<Index> volumes;
  std::vector<OutcomeLabel> labels;

  std::size_t size() const noexcept { return probabilities.size(); }
};

/// Eigenvalues binned into half-open windows [anchor + kδ, anchor + (k+1)δ).
/// Empty windows are dropped; the anchor defaults to the smallest eigenvalue.
/// Eigenvalues within 1e-9 below an edge go to the upper window.
CoarseGraining energy_graining(const HermitianOperator& h, double delta,
                               std::optional<double> anchor = std::nullopt);

/// Rank-1 projectors onto the columns of `basis` (labels are the column index).
CoarseGraining rank1_graining(const ComplexMatrix& basis);
CoarseGraining rank1_graining(std::span<const ComplexVector> basis);

/// The trivial graining {1}.
CoarseGraining identity_graining(Index dim);

/// X1 ⊗ X2 ⊗ ... with tuple labels in lexicographic order.
CoarseGraining product_graining(std::span<const CoarseGraining> parts, const Dims& dims);
CoarseGraining product_graining(std::span<const CoarseGraining> parts);

/// Joint energy-window / particle-number graining for commuting h and n.
/// Labels are (E-window, N).
CoarseGraining energy_particle_graining(const HermitianOperator& h, const HermitianOperator& n,
                                        double delta, std::optional<double> anchor = std::nullopt);

OutcomeDistribution outcome_distribution(const DensityMatrix& rho, const CoarseGraining& x);

/// p_x = tr{Π_x ρ} straight from a matrix, clamped and renormalized.
std::vector<double> outcome_probabilities(const ComplexMatrix& rho, const CoarseGraining& x);

}  // namespace obsent
