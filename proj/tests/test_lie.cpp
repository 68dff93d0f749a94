#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "nahmkn/lie.hpp"

using namespace nahmkn;

namespace {

Matrix jacobi(const Matrix& x, const Matrix& y, const Matrix& z) {
  return commutator(x, commutator(y, z)) + commutator(y, commutator(z, x)) +
         commutator(z, commutator(x, y));
}

// Truncated series sum_{j <= 20} ad_Y^j(X) / j!.
Matrix ad_series(const Matrix& y, const Matrix& x) {
  Matrix term = x, sum = x;
  for (int j = 1; j <= 20; ++j) {
    term = commutator(y, term) / static_cast<double>(j);
    sum += term;
  }
  return sum;
}

AlgebraElement compact_of(const Matrix& m) { return AlgebraElement::compact(m); }

}  // namespace

TEST(LieCore, Su2StructureConstants) {
  const auto t = su2_basis();
  EXPECT_LT(frobenius(commutator(t[0], t[1]) - t[2]), 1e-15);
  EXPECT_LT(frobenius(commutator(t[1], t[2]) - t[0]), 1e-15);
  EXPECT_LT(frobenius(commutator(t[2], t[0]) - t[1]), 1e-15);
  for (const auto& ta : t) EXPECT_NEAR(inner(ta, ta), 0.5, 1e-15);
  const auto b = bracket(compact_of(t[0]), compact_of(t[1]));
  EXPECT_LT(frobenius(b.matrix() - t[2]), 1e-15);
  EXPECT_LT(frobenius(bracket(compact_of(t[0]), compact_of(t[0])).matrix()), 1e-15);
}

TEST(LieCore, JacobiOnRandomSu3) {
  Rng rng = make_rng(7);
  for (int s = 0; s < 200; ++s) {
    const Matrix x = random_compact(3, rng), y = random_compact(3, rng), z = random_compact(3, rng);
    EXPECT_LT(frobenius(jacobi(x, y, z)), 1e-12);
  }
}

TEST(LieCore, BracketRejectsRankMismatch) {
  const auto a = AlgebraElement::zero(2);
  const auto b = AlgebraElement::zero(3);
  EXPECT_THROW(bracket(a, b), RankMismatch);
}

TEST(LieCore, ValidationRejectsBadMatrices) {
  Matrix m = zeros(2);
  m(0, 0) = 1.0;
  EXPECT_THROW(AlgebraElement::compact(m), InvalidElement);
  EXPECT_THROW(AlgebraElement::complexified(m), InvalidElement);
  Matrix g = identity(2);
  g(0, 0) = 2.0;
  EXPECT_THROW(GroupElement::special_linear(g), InvalidElement);
  EXPECT_THROW(GroupElement::special_unitary(g), InvalidElement);
}

TEST(LieCore, ExpExamples) {
  const auto t = su2_basis();
  EXPECT_LT(frobenius(exp(AlgebraElement::zero(2)).matrix() - identity(2)), 1e-15);
  // 2 pi T3 = diag(-i pi, i pi).
  const auto g = exp(compact_of(2.0 * std::numbers::pi * t[2]));
  EXPECT_LT(frobenius(g.matrix() + identity(2)), 1e-12);
  Rng rng = make_rng(11);
  for (int s = 0; s < 50; ++s) {
    const auto x = compact_of(random_compact(3, rng, 2.0));
    const Matrix prod = exp(x).matrix() * exp(-x).matrix();
    EXPECT_LT(frobenius(prod - identity(3)), 1e-12);
    EXPECT_NEAR(std::abs(exp(x).matrix().determinant() - 1.0), 0.0, 1e-10);
  }
}

TEST(LieCore, LogPrincipalExamples) {
  const auto t = su2_basis();
  EXPECT_LT(frobenius(log_principal(GroupElement::identity_of(2)).matrix()), 1e-15);
  const auto y = log_principal(exp(compact_of(0.3 * t[0])));
  EXPECT_LT(frobenius(y.matrix() - 0.3 * t[0]), 1e-10);
  EXPECT_THROW(log_principal(GroupElement::special_unitary(-identity(2))), BranchAmbiguity);
}

TEST(LieCore, LogPrincipalIsTracelessForSu3WithWrappedAngles) {
  // Angles (0.9 pi, 0.9 pi, -1.8 pi): the principal angles sum to 2 pi.
  const double a = 0.9 * std::numbers::pi;
  Matrix g = zeros(3);
  g(0, 0) = std::exp(kI * a);
  g(1, 1) = std::exp(kI * a);
  g(2, 2) = std::exp(-2.0 * kI * a);
  const auto y = log_principal(GroupElement::special_unitary(g));
  EXPECT_TRUE(is_compact(y.matrix(), 1e-12));
  EXPECT_LT(frobenius(matrix_exp(y.matrix()) - g), 1e-10);
}

TEST(LieCore, ExpLogRoundTripOnRandomUnitaries) {
  Rng rng = make_rng(3);
  int checked = 0;
  for (int s = 0; s < 1000; ++s) {
    const int n = 2 + s % 3;
    const Matrix k = random_special_unitary(n, rng);
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> eig{Eigen::MatrixXcd(k)};
    if ((eig.eigenvalues().array() + 1.0).abs().minCoeff() < 1e-3) continue;
    const auto g = GroupElement::special_unitary(k);
    const auto y = log_principal(g);
    EXPECT_TRUE(is_compact(y.matrix(), 1e-12));
    EXPECT_LT(frobenius(exp(y).matrix() - k), 1e-9);
    ++checked;
  }
  EXPECT_GT(checked, 900);
}

TEST(LieCore, LogPrincipalOnNonUnitary) {
  Rng rng = make_rng(5);
  for (int s = 0; s < 50; ++s) {
    const Matrix z = 0.5 * (random_compact(2, rng) + kI * random_compact(2, rng));
    const auto y = AlgebraElement::complexified(z);
    const auto g = exp(y);
    EXPECT_LT(frobenius(log_principal(g).matrix() - z), 1e-10);
  }
}

TEST(LieCore, AdjointMatchesSeriesAndPreservesInner) {
  Rng rng = make_rng(13);
  const auto t = su2_basis();
  const auto x0 = compact_of(t[0]);
  EXPECT_LT(frobenius(adjoint(GroupElement::identity_of(2), x0).matrix() - t[0]), 1e-15);
  for (int s = 0; s < 100; ++s) {
    const int n = 2 + s % 2;
    Matrix y = random_compact(n, rng);
    y *= rng() % 2 == 0 ? 1.0 / frobenius(y) : 0.5 / frobenius(y);
    const Matrix x = random_compact(n, rng), z = random_compact(n, rng);
    const auto k = exp(compact_of(y));
    const auto ax = adjoint(k, compact_of(x));
    EXPECT_LT(frobenius(ax.matrix() - ad_series(y, x)), 1e-10);
    EXPECT_EQ(ax.form(), Form::compact);
    EXPECT_NEAR(norm(ax), norm(compact_of(x)), 1e-10);
    const Matrix kr = random_special_unitary(n, rng);
    EXPECT_NEAR(inner(adjoint_unitary(kr, x), adjoint_unitary(kr, z)), inner(x, z), 1e-10);
  }
}

TEST(LieCore, InnerProductPositiveAndNormsCoincide) {
  Rng rng = make_rng(17);
  for (int s = 0; s < 200; ++s) {
    const Matrix x = random_compact(2 + s % 3, rng);
    EXPECT_GT(inner(x, x), 0.0);
    EXPECT_NEAR(norm(x), frobenius(x), 1e-12);
  }
}

TEST(LieCore, CompactBasisIsOrthonormal) {
  for (int n = 2; n <= 4; ++n) {
    const auto basis = compact_basis(n);
    ASSERT_EQ(static_cast<int>(basis.size()), n * n - 1);
    for (std::size_t i = 0; i < basis.size(); ++i) {
      EXPECT_TRUE(is_compact(basis[i]));
      for (std::size_t j = 0; j < basis.size(); ++j)
        EXPECT_NEAR(inner(basis[i], basis[j]), i == j ? 1.0 : 0.0, 1e-14);
    }
    Rng rng = make_rng(19);
    const Matrix x = random_compact(n, rng);
    EXPECT_LT(frobenius(from_coordinates(coordinates(x, basis), basis) - x), 1e-13);
  }
}

TEST(LieCore, Submultiplicativity) {
  Rng rng = make_rng(23);
  std::normal_distribution<double> normal;
  double worst_loose = 0.0, worst_sharp = 0.0;
  for (int s = 0; s < 10000; ++s) {
    const int n = 2 + s % 3;
    Matrix x(n, n), y(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        x(i, j) = Complex(normal(rng), normal(rng));
        y(i, j) = Complex(normal(rng), normal(rng));
      }
    const double lhs = frobenius(x * y);
    worst_loose = std::max(worst_loose, lhs / (n * n * frobenius(x) * frobenius(y)));
    worst_sharp = std::max(worst_sharp, lhs / (frobenius(x) * frobenius(y)));
  }
  EXPECT_LE(worst_loose, 1.0);
  EXPECT_LE(worst_sharp, 1.0);
  RecordProperty("max_ratio_n2_bound", std::to_string(worst_loose));
  RecordProperty("max_ratio_sharp_bound", std::to_string(worst_sharp));
}

TEST(LieCore, UnitaryPathMatchesExp) {
  Rng rng = make_rng(29);
  for (int s = 0; s < 20; ++s) {
    const Matrix y = random_compact(3, rng, 2.0);
    const UnitaryPath path(y);
    for (double t : {0.0, 0.3, 1.0, -0.7})
      EXPECT_LT(frobenius(path(t) - matrix_exp(t * y)), 1e-12);
  }
}

TEST(LieCore, HaarSamplesAreSpecialUnitary) {
  Rng rng = make_rng(31);
  for (int s = 0; s < 100; ++s) EXPECT_TRUE(is_special_unitary(random_special_unitary(2 + s % 3, rng), 1e-12));
}
