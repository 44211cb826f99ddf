#pragma once

// Random instances and small oracles shared by the test executables.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "obsent/entropy.hpp"
#include "obsent/errors.hpp"
#include "obsent/graining.hpp"
#include "obsent/linalg.hpp"

namespace testing {

using namespace obsent;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double normal() { return normal_(gen_); }
  double uniform(double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }
  Index integer(Index lo, Index hi) { return std::uniform_int_distribution<Index>(lo, hi)(gen_); }
  Complex cnormal() { return {normal(), normal()}; }

  ComplexMatrix gaussian(Index rows, Index cols) {
    ComplexMatrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < cols; ++j) m(i, j) = cnormal();
    return m;
  }

  ComplexVector vector(Index n) { return gaussian(n, 1).col(0); }

  ComplexMatrix hermitian(Index n) {
    const ComplexMatrix g = gaussian(n, n);
    return 0.5 * (g + g.adjoint());
  }

  ComplexMatrix unitary(Index n) {
    Eigen::HouseholderQR<ComplexMatrix> qr(gaussian(n, n));
    return qr.householderQ() * ComplexMatrix::Identity(n, n);
  }

  /// G G† / tr with G of random rank in [1, n].
  ComplexMatrix mixed_state(Index n, Index rank = 0) {
    if (rank == 0) rank = integer(1, n);
    const ComplexMatrix g = gaussian(n, rank);
    ComplexMatrix rho = g * g.adjoint();
    return rho / rho.trace().real();
  }

  DensityMatrix density(Index n, Index rank = 0) { return DensityMatrix(mixed_state(n, rank), {n}); }

  std::vector<double> probabilities(std::size_t n) {
    std::vector<double> p(n);
    for (auto& v : p) v = uniform(0.01, 1.0);
    const double s = std::accumulate(p.begin(), p.end(), 0.0);
    for (auto& v : p) v /= s;
    return p;
  }

  /// Columns of `frame` split into `blocks` consecutive groups of random size.
  CoarseGraining graining(const ComplexMatrix& frame, std::size_t blocks) {
    const Index n = frame.cols();
    blocks = std::clamp<std::size_t>(blocks, 1, static_cast<std::size_t>(n));
    std::vector<Index> cuts;
    for (Index c = 1; c < n; ++c) cuts.push_back(c);
    std::shuffle(cuts.begin(), cuts.end(), gen_);
    cuts.resize(blocks - 1);
    std::sort(cuts.begin(), cuts.end());
    cuts.push_back(n);
    std::vector<CoarseGraining::Outcome> out;
    Index start = 0;
    for (std::size_t b = 0; b < cuts.size(); ++b) {
      out.push_back({{{LabelKind::Index, static_cast<double>(b)}}, frame.middleCols(start, cuts[b] - start)});
      start = cuts[b];
    }
    return CoarseGraining(std::move(out), n);
  }

  CoarseGraining graining(Index n) { return graining(unitary(n), static_cast<std::size_t>(integer(1, n))); }

  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
  std::normal_distribution<double> normal_;
};

inline double max_diff(const ComplexMatrix& a, const ComplexMatrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

inline ComplexMatrix real_diag(std::initializer_list<double> d) {
  ComplexMatrix m = ComplexMatrix::Zero(static_cast<Index>(d.size()), static_cast<Index>(d.size()));
  Index i = 0;
  for (double v : d) {
    m(i, i) = v;
    ++i;
  }
  return m;
}

/// The code of the obsent::Error thrown by f, or nullopt if none was thrown.
template <class F>
std::optional<ErrorCode> error_code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

}  // namespace testing
