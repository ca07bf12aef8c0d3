#pragma once

#include <Eigen/Dense>

#include <vector>

namespace proxskip {

using Index = Eigen::Index;
using Vec = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

class Objective;

/// Dense square matrix whose entries are exactly symmetric and finite.
class SymMatrix {
 public:
  SymMatrix() = default;

  /// Throws ArgumentError unless `entries` is square, finite and exactly symmetric.
  explicit SymMatrix(Matrix entries);

  static SymMatrix identity(Index n);
  static SymMatrix diagonal(const Vec& diag);

  Index size() const noexcept { return m_.rows(); }
  const Matrix& matrix() const noexcept { return m_; }
  double operator()(Index i, Index j) const { return m_(i, j); }

 private:
  Matrix m_;
};

/// Eigen-decomposition with eigenvalues sorted in descending order.
/// Column k of `vectors` is the unit eigenvector for `values[k]`.
struct SymmetricEigen {
  Vec values;
  Matrix vectors;
};

inline constexpr Index kMaxEigenDimension = 512;

/// Cyclic Jacobi rotations. Requires size() <= kMaxEigenDimension.
SymmetricEigen symmetric_eigen(const SymMatrix& m);

/// Eigenvalues in descending order.
std::vector<double> symmetric_eigenvalues(const SymMatrix& m);

/// Symmetric PSD square root. Eigenvalues in [-1e-10, 0) are treated as zero;
/// anything more negative throws ArgumentError.
SymMatrix matrix_sqrt_psd(const SymMatrix& m);

/// D_f(x, y) = f(x) - f(y) - <grad f(y), x - y>.
double bregman_divergence(const Objective& f, const Vec& x, const Vec& y);

}  // namespace proxskip
