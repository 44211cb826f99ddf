#include "obsent/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>
#include <sstream>

#include "obsent/errors.hpp"
#include "obsent/graining.hpp"
#include "obsent/tolerances.hpp"

namespace obsent {

struct HermitianOperator::Cache {
  std::once_flag once;
  Spectrum spectrum;
  bool ready = false;
};

namespace {

void require_square(const ComplexMatrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    std::ostringstream os;
    os << what << ": expected a non-empty square matrix, got " << m.rows() << "x" << m.cols();
    throw Error(ErrorCode::DimensionMismatch, os.str());
  }
}

void require_finite(const ComplexMatrix& m, const char* what) {
  if (!m.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, std::string(what) + ": non-finite entries");
  }
}

}  // namespace

HermitianOperator::HermitianOperator(ComplexMatrix matrix)
    : matrix_(std::move(matrix)), cache_(std::make_shared<Cache>()) {
  require_square(matrix_, "HermitianOperator");
  require_finite(matrix_, "HermitianOperator");
  const double scale = std::max(1.0, max_abs(matrix_));
  const double asym = max_abs(matrix_ - matrix_.adjoint());
  if (asym > tol::kHermitian * scale) {
    std::ostringstream os;
    os << "matrix is not Hermitian (max|A - A^dagger| = " << asym << ")";
    throw Error(ErrorCode::InvalidArgument, os.str());
  }
  matrix_ = (0.5 * (matrix_ + matrix_.adjoint())).eval();
}

HermitianOperator HermitianOperator::zero(Index dim) {
  return HermitianOperator(ComplexMatrix::Zero(dim, dim));
}

HermitianOperator HermitianOperator::identity(Index dim) {
  return HermitianOperator(ComplexMatrix::Identity(dim, dim));
}

const Spectrum& HermitianOperator::spectrum() const {
  std::call_once(cache_->once, [this] {
    cache_->spectrum = eig_hermitian(matrix_);
    cache_->ready = true;
  });
  return cache_->spectrum;
}

bool HermitianOperator::has_spectrum() const { return cache_->ready; }

Spectrum eig_hermitian(const HermitianOperator& h) { return h.spectrum(); }

Spectrum eig_hermitian(const ComplexMatrix& h) {
  require_square(h, "eig_hermitian");
  // Real symmetric input (the common case for spin models) takes the much
  // cheaper real solver.
  if (h.imag().cwiseAbs().maxCoeff() == 0.0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> real_solver(h.real(), Eigen::ComputeEigenvectors);
    if (real_solver.info() != Eigen::Success) {
      throw Error(ErrorCode::ConvergenceFailure, "Hermitian eigendecomposition did not converge");
    }
    return Spectrum{real_solver.eigenvalues(), real_solver.eigenvectors().cast<Complex>()};
  }
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(h, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::ConvergenceFailure, "Hermitian eigendecomposition did not converge");
  }
  return Spectrum{solver.eigenvalues(), solver.eigenvectors()};
}

DensityMatrix::DensityMatrix(HermitianOperator op, Dims dims, Unchecked)
    : op_(std::move(op)), dims_(std::move(dims)) {
  if (total_dim(dims_) != op_.dim()) {
    std::ostringstream os;
    os << "factor dimensions multiply to " << total_dim(dims_) << " but the operator has size "
       << op_.dim();
    throw Error(ErrorCode::DimensionMismatch, os.str());
  }
}

DensityMatrix::DensityMatrix(ComplexMatrix matrix, Dims dims)
    : DensityMatrix(HermitianOperator(std::move(matrix)), std::move(dims), Unchecked{}) {
  const double tr = op_.matrix().trace().real();
  if (std::abs(tr - 1.0) > tol::kTrace) {
    std::ostringstream os;
    os << "density matrix trace is " << tr;
    throw Error(ErrorCode::NotNormalized, os.str());
  }
  const double lowest = op_.min_eigenvalue();
  if (lowest < -tol::kPositivity) {
    std::ostringstream os;
    os << "density matrix has eigenvalue " << lowest;
    throw Error(ErrorCode::InvalidArgument, os.str());
  }
}

DensityMatrix DensityMatrix::trusted(ComplexMatrix matrix, Dims dims) {
  // Round-off from long chains of unitary conjugations is removed here.
  const double tr = matrix.trace().real();
  if (std::abs(tr - 1.0) > 1e-9) {
    std::ostringstream os;
    os << "density matrix trace is " << tr;
    throw Error(ErrorCode::NotNormalized, os.str());
  }
  matrix /= tr;
  return DensityMatrix(HermitianOperator(std::move(matrix)), std::move(dims), Unchecked{});
}

DensityMatrix DensityMatrix::maximally_mixed(Dims dims) {
  const Index d = total_dim(dims);
  return trusted(ComplexMatrix::Identity(d, d) / static_cast<double>(d), std::move(dims));
}

DensityMatrix DensityMatrix::pure(const ComplexVector& psi, Dims dims) {
  const double norm = psi.norm();
  if (norm == 0.0) throw Error(ErrorCode::InvalidArgument, "zero state vector");
  const ComplexVector v = psi / norm;
  return trusted(v * v.adjoint(), std::move(dims));
}

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

ComplexMatrix kron_all(std::span<const ComplexMatrix> factors) {
  if (factors.empty()) return ComplexMatrix::Identity(1, 1);
  ComplexMatrix out = factors[0];
  for (std::size_t k = 1; k < factors.size(); ++k) out = kron(out, factors[k]);
  return out;
}

ComplexMatrix propagator_step(const HermitianOperator& h, double dt) {
  if (!std::isfinite(dt)) throw Error(ErrorCode::InvalidArgument, "propagator_step: dt not finite");
  if (dt == 0.0) return ComplexMatrix::Identity(h.dim(), h.dim());
  const Spectrum& s = h.spectrum();
  ComplexVector phases(s.values.size());
  for (Index i = 0; i < s.values.size(); ++i) {
    phases(i) = std::polar(1.0, -s.values(i) * dt);
  }
  return s.vectors * phases.asDiagonal() * s.vectors.adjoint();
}

Index total_dim(const Dims& dims) {
  return std::accumulate(dims.begin(), dims.end(), Index{1}, std::multiplies<>());
}

DensityMatrix partial_trace(const DensityMatrix& rho, std::span<const std::size_t> keep_in) {
  const Dims& dims = rho.dims();
  if (total_dim(dims) != rho.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "partial_trace: dims do not match operator size");
  }
  std::vector<std::size_t> keep(keep_in.begin(), keep_in.end());
  std::sort(keep.begin(), keep.end());
  keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
  if (keep.empty()) throw Error(ErrorCode::InvalidArgument, "partial_trace: empty keep set");
  for (std::size_t k : keep) {
    if (k >= dims.size()) throw Error(ErrorCode::DimensionMismatch, "partial_trace: factor index out of range");
  }
  if (keep.size() == dims.size()) return rho;

  std::vector<bool> kept(dims.size(), false);
  for (std::size_t k : keep) kept[k] = true;

  Dims kept_dims;
  Dims traced_dims;
  for (std::size_t k = 0; k < dims.size(); ++k) (kept[k] ? kept_dims : traced_dims).push_back(dims[k]);
  const Index dk = total_dim(kept_dims);
  const Index dt = total_dim(traced_dims);

  // full index of (kept multi-index a, traced multi-index b)
  std::vector<Index> full(static_cast<std::size_t>(dk * dt));
  std::vector<Index> digits(dims.size());
  for (Index f = 0; f < rho.dim(); ++f) {
    Index rem = f;
    for (std::size_t k = dims.size(); k-- > 0;) {
      digits[k] = rem % dims[k];
      rem /= dims[k];
    }
    Index a = 0;
    Index b = 0;
    for (std::size_t k = 0; k < dims.size(); ++k) {
      if (kept[k]) a = a * dims[k] + digits[k];
      else b = b * dims[k] + digits[k];
    }
    full[static_cast<std::size_t>(a * dt + b)] = f;
  }

  const ComplexMatrix& m = rho.matrix();
  ComplexMatrix out = ComplexMatrix::Zero(dk, dk);
  for (Index a = 0; a < dk; ++a) {
    for (Index c = 0; c < dk; ++c) {
      Complex acc = 0.0;
      for (Index b = 0; b < dt; ++b) {
        acc += m(full[static_cast<std::size_t>(a * dt + b)], full[static_cast<std::size_t>(c * dt + b)]);
      }
      out(a, c) = acc;
    }
  }
  return DensityMatrix::trusted(std::move(out), kept_dims);
}

DensityMatrix partial_trace(const DensityMatrix& rho, std::initializer_list<std::size_t> keep) {
  return partial_trace(rho, std::span<const std::size_t>(keep.begin(), keep.size()));
}

DensityMatrix dephase(const DensityMatrix& rho, const CoarseGraining& graining) {
  if (graining.dim() != rho.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "dephase: graining and state dimensions differ");
  }
  ComplexMatrix out = ComplexMatrix::Zero(rho.dim(), rho.dim());
  for (std::size_t x = 0; x < graining.size(); ++x) {
    const auto& b = graining.basis(x);
    const ComplexMatrix block = b.adjoint() * rho.matrix() * b;
    out.noalias() += b * block * b.adjoint();
  }
  return DensityMatrix::trusted(std::move(out), rho.dims());
}

ComplexMatrix embed(const ComplexMatrix& local, const Dims& dims, std::size_t site) {
  if (site >= dims.size() || local.rows() != dims[site] || local.cols() != dims[site]) {
    throw Error(ErrorCode::DimensionMismatch, "embed: local operator does not fit the factor");
  }
  Index left = 1;
  Index right = 1;
  for (std::size_t k = 0; k < site; ++k) left *= dims[k];
  for (std::size_t k = site + 1; k < dims.size(); ++k) right *= dims[k];
  ComplexMatrix out = local;
  if (left > 1) out = kron(ComplexMatrix::Identity(left, left), out);
  if (right > 1) out = kron(out, ComplexMatrix::Identity(right, right));
  return out;
}

double max_abs(const ComplexMatrix& a) {
  return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

double commutator_norm(const ComplexMatrix& a, const ComplexMatrix& b) {
  return max_abs(a * b - b * a);
}

Complex trace_product(const ComplexMatrix& a, const ComplexMatrix& b) {
  // tr(AB) = Σ_ij A_ij B_ji
  return (a.array() * b.transpose().array()).sum();
}

RealVector sandwich_diagonal(const ComplexMatrix& a, const ComplexMatrix& b) {
  const ComplexMatrix ab = a * b;
  return (b.conjugate().array() * ab.array()).colwise().sum().real().transpose();
}

ComplexMatrix sigma_x() {
  ComplexMatrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

ComplexMatrix sigma_y() {
  ComplexMatrix m(2, 2);
  m << 0, Complex(0, -1), Complex(0, 1), 0;
  return m;
}

ComplexMatrix sigma_z() {
  ComplexMatrix m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

ComplexMatrix sigma_plus() {
  ComplexMatrix m(2, 2);
  m << 0, 1, 0, 0;
  return m;
}

ComplexMatrix sigma_minus() {
  ComplexMatrix m(2, 2);
  m << 0, 0, 1, 0;
  return m;
}

}  // namespace obsent
