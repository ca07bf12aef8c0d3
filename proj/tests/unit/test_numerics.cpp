#include "proxskip/errors.hpp"
#include "proxskip/numerics.hpp"
#include "proxskip/problems.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

namespace proxskip {
namespace {

using testing::normal_vec;

class HalfSquaredNorm final : public Objective {
 public:
  explicit HalfSquaredNorm(Index d) : d_(d) {}
  Index dim() const override { return d_; }
  double value(const Vec& x) const override { return 0.5 * x.squaredNorm(); }
  void gradient_into(const Vec& x, Vec& out) const override { out = x; }

 private:
  Index d_;
};

SymMatrix sym(std::initializer_list<std::initializer_list<double>> rows) {
  const auto n = static_cast<Index>(rows.size());
  Matrix m(n, n);
  Index i = 0;
  for (const auto& r : rows) {
    Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return SymMatrix(m);
}

TEST(SymMatrix, RejectsAsymmetricAndNonFinite) {
  Matrix m(2, 2);
  m << 1, 2, 2.0000001, 1;
  EXPECT_THROW(SymMatrix{m}, ArgumentError);
  m << 1, std::nan(""), std::nan(""), 1;
  EXPECT_THROW(SymMatrix{m}, ArgumentError);
  EXPECT_THROW(SymMatrix{Matrix(2, 3)}, ArgumentError);
}

TEST(Bregman, HalfSquaredNormIsHalfDistance) {
  HalfSquaredNorm f(2);
  Vec x(2);
  x << 2, 0;
  EXPECT_DOUBLE_EQ(bregman_divergence(f, x, Vec::Zero(2)), 2.0);
}

TEST(Bregman, ZeroOnDiagonal) {
  std::mt19937_64 gen(1);
  const Problem p = synthetic::logistic(40, 5, 0.1, 1);
  const Vec x = normal_vec(5, gen);
  EXPECT_EQ(bregman_divergence(p, x, x), 0.0);
}

TEST(Bregman, LogisticMatchesFiniteDifferenceOracle) {
  std::mt19937_64 gen(2);
  const Problem p = synthetic::logistic(50, 6, 0.01, 2);
  for (int k = 0; k < 20; ++k) {
    const Vec x = normal_vec(6, gen), y = normal_vec(6, gen);
    const double oracle = p.value(x) - p.value(y) - testing::fd_gradient(p, y).dot(x - y);
    EXPECT_NEAR(bregman_divergence(p, x, y), oracle, 1e-5 * std::max(1.0, std::abs(oracle)));
  }
}

TEST(Bregman, DimensionMismatchThrows) {
  HalfSquaredNorm f(2);
  EXPECT_THROW(bregman_divergence(f, Vec::Zero(2), Vec::Zero(3)), ArgumentError);
}

TEST(Bregman, StrongConvexityAndSmoothnessSandwich) {
  std::mt19937_64 gen(3);
  const Problem raw = synthetic::logistic(80, 5, 0.0, 3);
  const Problem logi = raw.with_lambda(0.05);
  const Problem quad = synthetic::heterogeneous_quadratic(1, 5, 50.0, 1.0, 3);
  for (const Problem* f : {&logi, &quad}) {
    const SmoothnessInfo info = smoothness_constants(*f);
    for (int k = 0; k < 1000; ++k) {
      const Vec x = normal_vec(5, gen, 3.0), y = normal_vec(5, gen, 3.0);
      const double d = bregman_divergence(*f, x, y);
      const double r2 = (x - y).squaredNorm();
      EXPECT_GE(d, 0.5 * info.mu * r2 * (1 - 1e-9) - 1e-12);
      EXPECT_LE(d, 0.5 * info.L * r2 * (1 + 1e-9) + 1e-12);
    }
  }
}

TEST(Bregman, SymmetrizedEqualsGradientInnerProduct) {
  std::mt19937_64 gen(4);
  const Problem f = synthetic::logistic(60, 4, 0.1, 4);
  for (int k = 0; k < 200; ++k) {
    const Vec x = normal_vec(4, gen), y = normal_vec(4, gen);
    const double lhs = (f.gradient(x) - f.gradient(y)).dot(x - y);
    const double rhs = bregman_divergence(f, x, y) + bregman_divergence(f, y, x);
    EXPECT_NEAR(lhs, rhs, 1e-10 * std::max(1.0, std::abs(lhs)));
  }
}

TEST(Eigenvalues, Identity) {
  EXPECT_EQ(symmetric_eigenvalues(SymMatrix::identity(3)), (std::vector<double>{1, 1, 1}));
}

TEST(Eigenvalues, DiagonalSortedDescending) {
  Vec d(3);
  d << 3, 1, 2;
  EXPECT_EQ(symmetric_eigenvalues(SymMatrix::diagonal(d)), (std::vector<double>{3, 2, 1}));
}

TEST(Eigenvalues, TwoByTwoCharacteristicPolynomial) {
  const auto ev = symmetric_eigenvalues(sym({{2, 1}, {1, 2}}));
  ASSERT_EQ(ev.size(), 2u);
  EXPECT_NEAR(ev[0], 3.0, 1e-14);
  EXPECT_NEAR(ev[1], 1.0, 1e-14);
}

TEST(Eigenvalues, ResidualsSmallOnRandomMatrices) {
  std::mt19937_64 gen(5);
  for (Index n : {1, 2, 7, 30}) {
    Matrix a(n, n);
    for (Index j = 0; j < n; ++j) a.col(j) = normal_vec(n, gen);
    const Matrix s = a + a.transpose();
    const SymmetricEigen e = symmetric_eigen(SymMatrix(s));
    const double scale = s.norm();
    for (Index k = 0; k < n; ++k) {
      EXPECT_LE((s * e.vectors.col(k) - e.values[k] * e.vectors.col(k)).norm(), 1e-8 * scale);
      if (k > 0) EXPECT_GE(e.values[k - 1], e.values[k]);
    }
    EXPECT_LE((e.vectors.transpose() * e.vectors - Matrix::Identity(n, n)).cwiseAbs().maxCoeff(),
              1e-10);
  }
}

TEST(Eigenvalues, RejectsOversizedInput) {
  EXPECT_THROW(symmetric_eigen(SymMatrix::identity(kMaxEigenDimension + 1)), ArgumentError);
}

TEST(MatrixSqrt, IdentityAndDiagonal) {
  EXPECT_TRUE(matrix_sqrt_psd(SymMatrix::identity(3)).matrix().isApprox(Matrix::Identity(3, 3)));
  Vec d(2);
  d << 4, 9;
  const Matrix r = matrix_sqrt_psd(SymMatrix::diagonal(d)).matrix();
  EXPECT_NEAR(r(0, 0), 2.0, 1e-14);
  EXPECT_NEAR(r(1, 1), 3.0, 1e-14);
  EXPECT_NEAR(r(0, 1), 0.0, 1e-14);
}

TEST(MatrixSqrt, ReconstructsRandomPsd) {
  std::mt19937_64 gen(6);
  for (int k = 0; k < 10; ++k) {
    Matrix a(3, 3);
    for (Index j = 0; j < 3; ++j) a.col(j) = normal_vec(3, gen);
    const Matrix m = a.transpose() * a;
    const Matrix msym = 0.5 * (m + m.transpose());
    const SymMatrix r = matrix_sqrt_psd(SymMatrix(msym));
    EXPECT_LE((r.matrix() * r.matrix() - msym).cwiseAbs().maxCoeff(), 1e-8);
    const auto ev_m = symmetric_eigenvalues(SymMatrix(msym));
    const auto ev_r = symmetric_eigenvalues(r);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(ev_r[i], std::sqrt(std::max(0.0, ev_m[i])), 1e-7);
  }
}

TEST(MatrixSqrt, ClampsTinyNegativeRejectsIndefinite) {
  Vec d(2);
  d << 1.0, -5e-11;
  const Matrix r = matrix_sqrt_psd(SymMatrix::diagonal(d)).matrix();
  EXPECT_EQ(r(1, 1), 0.0);
  d << 1.0, -1e-6;
  EXPECT_THROW(matrix_sqrt_psd(SymMatrix::diagonal(d)), ArgumentError);
}

}  // namespace
}  // namespace proxskip
