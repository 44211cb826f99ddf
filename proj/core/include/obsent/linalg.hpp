#pragma once

// Dense complex linear algebra on finite tensor-product Hilbert spaces.
//
// Factor ordering follows the Kronecker convention: for dims {d0, d1, ...} the
// first factor is the most significant index, (a ⊗ b)[i*rb + k, j*cb + l] =
// a[i, j] * b[k, l].

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace obsent {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;
using Dims = std::vector<Index>;

class CoarseGraining;

/// Eigenvalues in ascending order with the matching orthonormal eigenvectors
/// stored column-wise.
struct Spectrum {
  RealVector values;
  ComplexMatrix vectors;
};

class HermitianOperator {
 public:
  /// Validates max|A - A†| <= 1e-10 max(1, max|A|) and stores the exactly
  /// symmetrized matrix.
  explicit HermitianOperator(ComplexMatrix matrix);

  static HermitianOperator zero(Index dim);
  static HermitianOperator identity(Index dim);

  const ComplexMatrix& matrix() const noexcept { return matrix_; }
  Index dim() const noexcept { return matrix_.rows(); }

  /// Computed on first use and cached; safe to call concurrently.
  const Spectrum& spectrum() const;
  bool has_spectrum() const;

  double min_eigenvalue() const { return spectrum().values(0); }
  double max_eigenvalue() const { return spectrum().values(spectrum().values.size() - 1); }

 private:
  struct Cache;
  ComplexMatrix matrix_;
  std::shared_ptr<Cache> cache_;
};

class DensityMatrix {
 public:
  /// Full validation: Hermitian, unit trace (1e-12), smallest eigenvalue >= -1e-10.
  DensityMatrix(ComplexMatrix matrix, Dims dims);

  /// For states produced by trace- and positivity-preserving maps (unitary
  /// conjugation, partial trace). Checks Hermiticity and trace only.
  static DensityMatrix trusted(ComplexMatrix matrix, Dims dims);

  static DensityMatrix maximally_mixed(Dims dims);
  static DensityMatrix pure(const ComplexVector& psi, Dims dims);

  const ComplexMatrix& matrix() const noexcept { return op_.matrix(); }
  const HermitianOperator& op() const noexcept { return op_; }
  const Dims& dims() const noexcept { return dims_; }
  Index dim() const noexcept { return op_.dim(); }
  const Spectrum& spectrum() const { return op_.spectrum(); }

 private:
  struct Unchecked {};
  DensityMatrix(HermitianOperator op, Dims dims, Unchecked);

  HermitianOperator op_;
  Dims dims_;
};

Spectrum eig_hermitian(const HermitianOperator& h);
Spectrum eig_hermitian(const ComplexMatrix& h);

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix kron_all(std::span<const ComplexMatrix> factors);

/// e^{-i h dt} through the spectral decomposition of h.
ComplexMatrix propagator_step(const HermitianOperator& h, double dt);

/// Reduced state on the factors listed in `keep` (ascending order is imposed).
DensityMatrix partial_trace(const DensityMatrix& rho, std::span<const std::size_t> keep);
DensityMatrix partial_trace(const DensityMatrix& rho, std::initializer_list<std::size_t> keep);

/// Σ_x Π_x ρ Π_x.
DensityMatrix dephase(const DensityMatrix& rho, const CoarseGraining& graining);

/// Embeds an operator acting on factor `site` of `dims` into the full space.
ComplexMatrix embed(const ComplexMatrix& local, const Dims& dims, std::size_t site);

Index total_dim(const Dims& dims);

double max_abs(const ComplexMatrix& a);
double commutator_norm(const ComplexMatrix& a, const ComplexMatrix& b);
Complex trace_product(const ComplexMatrix& a, const ComplexMatrix& b);

/// Diagonal of B† A B without forming the full product.
RealVector sandwich_diagonal(const ComplexMatrix& a, const ComplexMatrix& b);

ComplexMatrix sigma_x();
ComplexMatrix sigma_y();
ComplexMatrix sigma_z();
ComplexMatrix sigma_plus();
ComplexMatrix sigma_minus();

}  // namespace obsent
