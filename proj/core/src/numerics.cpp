#include "proxskip/numerics.hpp"

#include "proxskip/errors.hpp"
#include "proxskip/objective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace proxskip {

SymMatrix::SymMatrix(Matrix entries) : m_(std::move(entries)) {
  if (m_.rows() != m_.cols()) throw ArgumentError("SymMatrix: matrix is not square");
  if (!m_.allFinite()) throw ArgumentError("SymMatrix: non-finite entry");
  for (Index i = 0; i < m_.rows(); ++i) {
    for (Index j = i + 1; j < m_.cols(); ++j) {
      if (m_(i, j) != m_(j, i)) throw ArgumentError("SymMatrix: matrix is not symmetric");
    }
  }
}

SymMatrix SymMatrix::identity(Index n) { return SymMatrix(Matrix::Identity(n, n)); }

SymMatrix SymMatrix::diagonal(const Vec& diag) { return SymMatrix(Matrix(diag.asDiagonal())); }

SymmetricEigen symmetric_eigen(const SymMatrix& m) {
  const Index n = m.size();
  if (n > kMaxEigenDimension) throw ArgumentError("symmetric_eigen: dimension exceeds 512");
  Matrix a = m.matrix();
  Matrix v = Matrix::Identity(n, n);
  const double scale = std::max(a.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Index i = 0; i < n; ++i)
      for (Index j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (std::sqrt(off) <= 1e-15 * scale) break;

    for (Index p = 0; p < n; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Index k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index i, Index j) { return a(i, i) > a(j, j); });
  SymmetricEigen out{Vec(n), Matrix(n, n)};
  for (Index k = 0; k < n; ++k) {
    const Index src = order[static_cast<std::size_t>(k)];
    out.values[k] = a(src, src);
    out.vectors.col(k) = v.col(src);
  }
  return out;
}

std::vector<double> symmetric_eigenvalues(const SymMatrix& m) {
  const Vec values = symmetric_eigen(m).values;
  return {values.begin(), values.end()};
}

SymMatrix matrix_sqrt_psd(const SymMatrix& m) {
  const SymmetricEigen eig = symmetric_eigen(m);
  const Index n = m.size();
  Vec root(n);
  for (Index k = 0; k < n; ++k) {
    const double lambda = eig.values[k];
    if (lambda < -1e-10) throw ArgumentError("matrix_sqrt_psd: matrix is not positive semidefinite");
    root[k] = std::sqrt(std::max(lambda, 0.0));
  }
  Matrix r = eig.vectors * root.asDiagonal() * eig.vectors.transpose();
  // Symmetrize exactly so the result passes the SymMatrix invariant.
  Matrix sym = 0.5 * (r + r.transpose());
  return SymMatrix(std::move(sym));
}

double bregman_divergence(const Objective& f, const Vec& x, const Vec& y) {
  if (x.size() != f.dim() || y.size() != f.dim())
    throw ArgumentError("bregman_divergence: dimension mismatch");
  const Vec g = f.gradient(y);
  return f.value(x) - f.value(y) - g.dot(x - y);
}

}  // namespace proxskip
