#pragma once

// Matrix realization of K = SU(n) inside G = SL(n, C).
//
// The compact Lie algebra is the space of traceless skew-Hermitian matrices
// with the invariant inner product <X, Y> = -Re tr(XY). On that subspace the
// induced norm coincides with the Frobenius norm, so the two norm-equivalence
// constants between them are both 1.

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "nahmkn/config.hpp"
#include "nahmkn/errors.hpp"
#include "nahmkn/rng.hpp"

namespace nahmkn {

using Complex = std::complex<double>;
inline constexpr Complex kI{0.0, 1.0};

/// Largest supported rank. Matrices live on the stack up to this size.
inline constexpr int kMaxRank = 4;
using Matrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic,
                             Eigen::ColMajor, kMaxRank, kMaxRank>;

// ---------------------------------------------------------------------------
// Raw matrix helpers. These do no validation and are used by the integrators.
// ---------------------------------------------------------------------------

inline Matrix identity(int n) { return Matrix::Identity(n, n); }
inline Matrix zeros(int n) { return Matrix::Zero(n, n); }

inline Matrix commutator(const Matrix& a, const Matrix& b) {
  return a * b - b * a;
}

/// Invariant pairing -Re tr(XY). Positive definite on skew-Hermitian
/// matrices; its complex-bilinear extension identifies g with g*.
inline double inner(const Matrix& x, const Matrix& y) {
  return -(x * y).trace().real();
}

/// Complex-bilinear extension of the invariant pairing, -tr(XY).
inline Complex bilinear(const Matrix& x, const Matrix& y) {
  return -(x * y).trace();
}

/// Norm induced by the invariant inner product. For skew-Hermitian input
/// this equals the Frobenius norm.
inline double norm(const Matrix& x) { return std::sqrt(std::max(0.0, inner(x, x))); }

/// Ambient Frobenius norm |M| on gl(n, C).
inline double frobenius(const Matrix& m) { return m.norm(); }

inline Matrix project_traceless(const Matrix& m) {
  const int n = static_cast<int>(m.rows());
  return m - (m.trace() / static_cast<double>(n)) * identity(n);
}

/// Orthogonal projection of gl(n, C) onto su(n).
inline Matrix project_compact(const Matrix& m) {
  return project_traceless(0.5 * (m - m.adjoint()));
}

/// Splits Z in sl(n, C) as A + iB with A, B in su(n).
inline std::pair<Matrix, Matrix> split_complex(const Matrix& z) {
  return {0.5 * (z - z.adjoint()), (z + z.adjoint()) / (2.0 * kI)};
}

inline double scale_of(const Matrix& m) { return std::max(1.0, m.norm()); }

inline bool is_compact(const Matrix& m, double tol = defaults::kAlgebraTol) {
  const double s = scale_of(m);
  return (m + m.adjoint()).norm() <= tol * s && std::abs(m.trace()) <= tol * s;
}

inline bool is_traceless(const Matrix& m, double tol = defaults::kAlgebraTol) {
  return std::abs(m.trace()) <= tol * scale_of(m);
}

inline bool is_special_unitary(const Matrix& m, double tol = defaults::kGroupTol) {
  const int n = static_cast<int>(m.rows());
  return (m * m.adjoint() - identity(n)).norm() <= tol &&
         std::abs(m.determinant() - 1.0) <= tol;
}

/// Ad_g X = g X g^{-1} for an arbitrary invertible g.
inline Matrix adjoint_action(const Matrix& g, const Matrix& x) {
  return g * x * g.inverse();
}

/// Ad_k X for unitary k.
inline Matrix adjoint_unitary(const Matrix& k, const Matrix& x) {
  return k * x * k.adjoint();
}

inline Matrix matrix_exp(const Matrix& m) {
  Matrix out = m.exp();
  return out;
}

/// t -> exp(tY) for a fixed skew-Hermitian Y, evaluated through a single
/// unitary diagonalization Y = U diag(i theta) U^*.
class UnitaryPath {
 public:
  UnitaryPath() = default;
  explicit UnitaryPath(const Matrix& y) {
    // H = iY is Hermitian with the same eigenvectors.
    const Eigen::MatrixXcd h = (kI * y).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(0.5 * (h + h.adjoint()));
    basis_ = solver.eigenvectors();
    // Y = -i H, so the eigenvalues of Y are -i lambda.
    angles_ = -solver.eigenvalues();
  }

  int rank() const { return static_cast<int>(angles_.size()); }

  /// Eigenvalue angles theta_j with Y = U diag(i theta) U^*.
  const Eigen::VectorXd& angles() const { return angles_; }
  const Matrix& basis() const { return basis_; }

  Matrix operator()(double t) const {
    const int n = rank();
    Matrix d = zeros(n);
    for (int j = 0; j < n; ++j) d(j, j) = std::exp(kI * (t * angles_(j)));
    return basis_ * d * basis_.adjoint();
  }

 private:
  Matrix basis_;
  Eigen::VectorXd angles_;
};

/// Orthonormal basis of su(n) for the invariant inner product.
inline std::vector<Matrix> compact_basis(int n) {
  std::vector<Matrix> basis;
  const double r2 = std::sqrt(2.0);
  for (int j = 0; j < n; ++j) {
    for (int k = j + 1; k < n; ++k) {
      Matrix a = zeros(n);
      a(j, k) = 1.0 / r2;
      a(k, j) = -1.0 / r2;
      basis.push_back(a);
      Matrix b = zeros(n);
      b(j, k) = kI / r2;
      b(k, j) = kI / r2;
      basis.push_back(b);
    }
  }
  // Diagonal part: i * diag(1, ..., 1, -m, 0, ...) normalized.
  for (int m = 1; m < n; ++m) {
    Matrix d = zeros(n);
    for (int j = 0; j < m; ++j) d(j, j) = kI;
    d(m, m) = -kI * static_cast<double>(m);
    basis.push_back(d / norm(d));
  }
  return basis;
}

/// Coordinates of X in an orthonormal basis.
inline Eigen::VectorXd coordinates(const Matrix& x, const std::vector<Matrix>& basis) {
  Eigen::VectorXd c(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t j = 0; j < basis.size(); ++j) c(static_cast<Eigen::Index>(j)) = inner(x, basis[j]);
  return c;
}

inline Matrix from_coordinates(const Eigen::VectorXd& c, const std::vector<Matrix>& basis) {
  Matrix x = zeros(static_cast<int>(basis.front().rows()));
  for (std::size_t j = 0; j < basis.size(); ++j) x += c(static_cast<Eigen::Index>(j)) * basis[j];
  return x;
}

/// T_a = -(i/2) sigma_a; satisfies [T_1, T_2] = T_3 and cyclic, |T_a|^2 = 1/2.
inline std::array<Matrix, 3> su2_basis() {
  Matrix s1(2, 2), s2(2, 2), s3(2, 2);
  s1 << 0.0, 1.0, 1.0, 0.0;
  s2 << 0.0, -kI, kI, 0.0;
  s3 << 1.0, 0.0, 0.0, -1.0;
  const Complex c = -0.5 * kI;
  return {c * s1, c * s2, c * s3};
}

inline Matrix random_compact(int n, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = Complex(normal(rng), normal(rng));
  return scale * project_compact(m);
}

/// Haar-distributed element of SU(n).
inline Matrix random_special_unitary(int n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXcd z(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) z(i, j) = Complex(normal(rng), normal(rng));
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(z);
  Eigen::MatrixXcd q = qr.householderQ();
  const Eigen::MatrixXcd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j) q.col(j) *= r(j, j) / std::abs(r(j, j));
  const Complex det = q.determinant();
  q /= std::pow(det, 1.0 / n);
  return q;
}

// ---------------------------------------------------------------------------
// Validated element types.
// ---------------------------------------------------------------------------

enum class Form { compact, complex };

class AlgebraElement {
 public:
  /// Traceless skew-Hermitian matrix (an element of su(n)).
  static AlgebraElement compact(Matrix m, double tol = defaults::kAlgebraTol) {
    if (m.rows() != m.cols() || m.rows() < 1 || m.rows() > kMaxRank)
      throw InvalidElement("algebra element must be square with rank in [1, 4]");
    if (!is_compact(m, tol)) throw InvalidElement("matrix is not traceless skew-Hermitian");
    return AlgebraElement(std::move(m), Form::compact);
  }

  /// Traceless complex matrix (an element of sl(n, C)).
  static AlgebraElement complexified(Matrix m, double tol = defaults::kAlgebraTol) {
    if (m.rows() != m.cols() || m.rows() < 1 || m.rows() > kMaxRank)
      throw InvalidElement("algebra element must be square with rank in [1, 4]");
    if (!is_traceless(m, tol)) throw InvalidElement("matrix is not traceless");
    return AlgebraElement(std::move(m), Form::complex);
  }

  static AlgebraElement zero(int n, Form form = Form::compact) {
    return AlgebraElement(zeros(n), form);
  }

  const Matrix& matrix() const noexcept { return m_; }
  Form form() const noexcept { return form_; }
  int rank() const noexcept { return static_cast<int>(m_.rows()); }

  friend AlgebraElement operator+(const AlgebraElement& a, const AlgebraElement& b) {
    check_same(a, b);
    return AlgebraElement(a.m_ + b.m_, a.form_);
  }
  friend AlgebraElement operator-(const AlgebraElement& a, const AlgebraElement& b) {
    check_same(a, b);
    return AlgebraElement(a.m_ - b.m_, a.form_);
  }
  friend AlgebraElement operator*(double s, const AlgebraElement& a) {
    return AlgebraElement(s * a.m_, a.form_);
  }
  AlgebraElement operator-() const { return AlgebraElement(-m_, form_); }

  static void check_same(const AlgebraElement& a, const AlgebraElement& b) {
    if (a.rank() != b.rank()) throw RankMismatch("algebra elements have different rank");
    if (a.form() != b.form()) throw InvalidElement("algebra elements have different form");
  }

 private:
  AlgebraElement(Matrix m, Form form) : m_(std::move(m)), form_(form) {}

  Matrix m_;
  Form form_ = Form::compact;
};

class GroupElement {
 public:
  static GroupElement special_unitary(Matrix m, double tol = defaults::kGroupTol) {
    if (m.rows() != m.cols() || m.rows() < 1 || m.rows() > kMaxRank)
      throw InvalidElement("group element must be square with rank in [1, 4]");
    if (!is_special_unitary(m, tol)) throw InvalidElement("matrix is not in SU(n)");
    return GroupElement(std::move(m), true);
  }

  static GroupElement special_linear(Matrix m, double tol = defaults::kGroupTol) {
    if (m.rows() != m.cols() || m.rows() < 1 || m.rows() > kMaxRank)
      throw InvalidElement("group element must be square with rank in [1, 4]");
    if (std::abs(m.determinant() - 1.0) > tol) throw InvalidElement("determinant is not 1");
    const int n = static_cast<int>(m.rows());
    // Only (numerically) exact unitaries take the unitary code paths.
    const bool unitary = (m * m.adjoint() - identity(n)).norm() <= 1e-13;
    return GroupElement(std::move(m), unitary);
  }

  static GroupElement identity_of(int n) { return GroupElement(identity(n), true); }

  const Matrix& matrix() const noexcept { return m_; }
  bool unitary() const noexcept { return unitary_; }
  int rank() const noexcept { return static_cast<int>(m_.rows()); }

  GroupElement inverse() const {
    return unitary_ ? GroupElement(m_.adjoint(), true) : GroupElement(m_.inverse(), false);
  }

  friend GroupElement operator*(const GroupElement& a, const GroupElement& b) {
    if (a.rank() != b.rank()) throw RankMismatch("group elements have different rank");
    return GroupElement(a.m_ * b.m_, a.unitary_ && b.unitary_);
  }

 private:
  GroupElement(Matrix m, bool unitary) : m_(std::move(m)), unitary_(unitary) {}

  Matrix m_;
  bool unitary_ = true;
};

// ---------------------------------------------------------------------------
// Operations on validated elements.
// ---------------------------------------------------------------------------

inline AlgebraElement bracket(const AlgebraElement& x, const AlgebraElement& y) {
  AlgebraElement::check_same(x, y);
  const Matrix c = commutator(x.matrix(), y.matrix());
  return x.form() == Form::compact ? AlgebraElement::compact(project_compact(c), 1.0)
                                   : AlgebraElement::complexified(project_traceless(c), 1.0);
}

inline double inner_product(const AlgebraElement& x, const AlgebraElement& y) {
  AlgebraElement::check_same(x, y);
  return inner(x.matrix(), y.matrix());
}

inline double norm(const AlgebraElement& x) { return frobenius(x.matrix()); }

inline GroupElement exp(const AlgebraElement& x) {
  Matrix e = matrix_exp(x.matrix());
  if (x.form() == Form::compact) return GroupElement::special_unitary(std::move(e), 1e-9);
  return GroupElement::special_linear(std::move(e), 1e-9 * std::max(1.0, e.norm()));
}

/// Principal logarithm, eigenvalue angles in (-pi, pi].
///
/// For unitary input the result is traceless skew-Hermitian; when the
/// principal angles of an SU(n) element do not sum to zero, the angles
/// closest to +pi are moved down by 2 pi until they do. An eigenvalue within
/// `branch_tol` of -1 (or, for non-unitary input, of the closed negative
/// real axis) raises BranchAmbiguity.
inline AlgebraElement log_principal(const GroupElement& g,
                                    double branch_tol = defaults::kBranchTol) {
  const int n = g.rank();
  if (g.unitary()) {
    Eigen::ComplexSchur<Eigen::MatrixXcd> schur(Eigen::MatrixXcd(g.matrix()));
    const Eigen::MatrixXcd& u = schur.matrixU();
    const Eigen::MatrixXcd& t = schur.matrixT();
    std::vector<double> theta(static_cast<std::size_t>(n));
    double sum = 0.0;
    for (int j = 0; j < n; ++j) {
      const Complex lambda = t(j, j);
      if (std::abs(lambda + 1.0) <= branch_tol)
        throw BranchAmbiguity("eigenvalue at -1: principal logarithm is ambiguous");
      theta[static_cast<std::size_t>(j)] = std::arg(lambda);
      sum += std::arg(lambda);
    }
    int wraps = static_cast<int>(std::lround(sum / (2.0 * std::numbers::pi)));
    while (wraps != 0) {
      auto it = wraps > 0 ? std::max_element(theta.begin(), theta.end())
                          : std::min_element(theta.begin(), theta.end());
      *it -= (wraps > 0 ? 2.0 : -2.0) * std::numbers::pi;
      wraps += wraps > 0 ? -1 : 1;
    }
    Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(n, n);
    for (int j = 0; j < n; ++j) d(j, j) = kI * theta[static_cast<std::size_t>(j)];
    const Matrix y = u * d * u.adjoint();
    return AlgebraElement::compact(project_compact(y), 1.0);
  }
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> eig(Eigen::MatrixXcd(g.matrix()), false);
  for (int j = 0; j < n; ++j) {
    const Complex lambda = eig.eigenvalues()(j);
    if (lambda.real() < 0.0 && std::abs(lambda.imag()) <= branch_tol * std::abs(lambda))
      throw BranchAmbiguity("eigenvalue on the negative real axis");
    if (std::abs(lambda) <= branch_tol) throw BranchAmbiguity("singular matrix has no logarithm");
  }
  const Matrix y = g.matrix().log();
  if (std::abs(y.trace()) > 1e-8)
    throw BranchAmbiguity("principal logarithm is not traceless");
  return AlgebraElement::complexified(project_traceless(y), 1.0);
}

inline AlgebraElement adjoint(const GroupElement& k, const AlgebraElement& x) {
  if (k.rank() != x.rank()) throw RankMismatch("adjoint: rank mismatch");
  const Matrix y = k.unitary() ? adjoint_unitary(k.matrix(), x.matrix())
                               : adjoint_action(k.matrix(), x.matrix());
  if (x.form() == Form::compact) {
    if (!k.unitary()) return AlgebraElement::complexified(project_traceless(y), 1.0);
    return AlgebraElement::compact(project_compact(y), 1.0);
  }
  return AlgebraElement::complexified(project_traceless(y), 1.0);
}

}  // namespace nahmkn
