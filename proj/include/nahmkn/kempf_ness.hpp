#pragma once

// Kempf-Ness machinery for a unitary representation of K on C^N with a
// character twist.
//
// The Lie algebra of K is handled abstractly as R^r: the problem carries the
// images E_1..E_r of an orthonormal basis as skew-Hermitian N x N matrices
// (the representation need not be faithful). A group point of G is written
// g = exp(i S) k with S in R^r and k in the image of K.
//
// For a K-invariant potential f on C^N the Kempf-Ness function of p with the
// character chi is
//     F(g) = f(g p) - (1 / 2 pi hbar) log|chi(g)|,
// the logarithm of the fibre norm of the lift (p, 1) in the dual of the
// twisted trivial bundle, divided by 4 pi hbar. Its derivative along
// t -> exp(itX) g is the shifted moment map mu(g p)(X) - xi(X).

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "nahmkn/config.hpp"
#include "nahmkn/errors.hpp"
#include "nahmkn/rng.hpp"

namespace nahmkn {

using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

/// Radial K-invariant potential f(p) = phi(|p|^2) with its first two
/// derivatives in s = |p|^2.
struct Potential {
  enum class Kind { standard, log_norm, radial };
  Kind kind = Kind::standard;
  std::function<double(double)> r, dr, ddr;  // radial only

  /// f = |p|^2 / 2, the potential of the flat metric.
  static Potential standard() { return {}; }
  /// f = (1 / 4 pi hbar) log |p|^2; F then only sees the projective class of p.
  static Potential log_norm() { return {Kind::log_norm, {}, {}, {}}; }
  static Potential radial(std::function<double(double)> r, std::function<double(double)> dr,
                          std::function<double(double)> ddr) {
    return {Kind::radial, std::move(r), std::move(dr), std::move(ddr)};
  }

  double value(double s, double hbar) const {
    switch (kind) {
      case Kind::standard: return 0.5 * s;
      case Kind::log_norm: return std::log(s) / (4.0 * std::numbers::pi * hbar);
      default: return r(s);
    }
  }
  double d1(double s, double hbar) const {
    switch (kind) {
      case Kind::standard: return 0.5;
      case Kind::log_norm: return 1.0 / (4.0 * std::numbers::pi * hbar * s);
      default: return dr(s);
    }
  }
  double d2(double s, double hbar) const {
    switch (kind) {
      case Kind::standard: return 0.0;
      case Kind::log_norm: return -1.0 / (4.0 * std::numbers::pi * hbar * s * s);
      default: return ddr(s);
    }
  }
  /// The value at p = 0 is meaningful only for potentials finite there.
  bool defined_at_zero() const { return kind == Kind::standard; }
};

struct LinearGitProblem {
  int dim = 0;
  std::vector<CMatrix> generators;  // images of an orthonormal basis of k
  Eigen::VectorXd character;        // d chi(e_j) = i lambda_j
  double hbar = 1.0 / (2.0 * std::numbers::pi);
  Potential potential = Potential::standard();

  int rank() const { return static_cast<int>(generators.size()); }
  bool abelian() const {
    for (std::size_t i = 0; i < generators.size(); ++i)
      for (std::size_t j = i + 1; j < generators.size(); ++j)
        if ((generators[i] * generators[j] - generators[j] * generators[i]).norm() > 0.0) return false;
    return true;
  }

  /// a = 1 / (2 pi hbar), so that xi = a i d chi.
  double shift_scale() const { return 1.0 / (2.0 * std::numbers::pi * hbar); }

  CMatrix algebra(const Eigen::VectorXd& x) const {
    CMatrix m = CMatrix::Zero(dim, dim);
    for (int j = 0; j < rank(); ++j) m += x(j) * generators[static_cast<std::size_t>(j)];
    return m;
  }

  /// Validates the data. `shift`, when given, must equal 1 / (2 pi hbar).
  static LinearGitProblem make(std::vector<CMatrix> generators, Eigen::VectorXd character,
                               double hbar, std::optional<double> shift = {},
                               Potential potential = Potential::standard(),
                               bool require_integral = false) {
    if (generators.empty()) throw InvalidProblem("at least one generator is required");
    if (!(hbar > 0.0)) throw InvalidProblem("hbar must be positive");
    const auto dim = generators.front().rows();
    for (const auto& e : generators) {
      if (e.rows() != dim || e.cols() != dim) throw InvalidProblem("generators must be N x N");
      if ((e + e.adjoint()).norm() > 1e-12 * std::max(1.0, e.norm()))
        throw InvalidProblem("generators must be skew-Hermitian");
    }
    if (character.size() != static_cast<Eigen::Index>(generators.size()))
      throw InvalidProblem("character weight must have one entry per generator");
    if (shift) {
      const double a = 1.0 / (2.0 * std::numbers::pi * hbar);
      if (!(*shift > 0.0) || std::abs(*shift - a) > 1e-12 * a)
        throw InvalidProblem("shift level must equal 1 / (2 pi hbar)");
    }
    if (require_integral)
      for (Eigen::Index j = 0; j < character.size(); ++j)
        if (std::abs(character(j) - std::round(character(j))) > 1e-12)
          throw InvalidProblem("character weight must be integral on a torus basis");
    LinearGitProblem p;
    p.dim = static_cast<int>(dim);
    p.generators = std::move(generators);
    p.character = std::move(character);
    p.hbar = hbar;
    p.potential = std::move(potential);
    p.check_character_on_brackets();
    return p;
  }

  /// Torus (S^1)^r acting on C^N with integer weights: weights[i][j] is the
  /// weight of coordinate i under the j-th circle, E_j = diag(i w_{.j}).
  static LinearGitProblem torus(const std::vector<std::vector<int>>& weights,
                                const std::vector<int>& character, double hbar = 1.0 / (2.0 * std::numbers::pi)) {
    const int n = static_cast<int>(weights.size());
    if (n == 0) throw InvalidProblem("torus problem needs N >= 1");
    const int r = static_cast<int>(character.size());
    std::vector<CMatrix> gens(static_cast<std::size_t>(r), CMatrix::Zero(n, n));
    for (int i = 0; i < n; ++i) {
      if (static_cast<int>(weights[static_cast<std::size_t>(i)].size()) != r)
        throw InvalidProblem("each coordinate needs one weight per circle");
      for (int j = 0; j < r; ++j)
        gens[static_cast<std::size_t>(j)](i, i) = std::complex<double>(0.0, weights[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
    }
    Eigen::VectorXd lambda(r);
    for (int j = 0; j < r; ++j) lambda(j) = character[static_cast<std::size_t>(j)];
    return make(std::move(gens), lambda, hbar, {}, Potential::standard(), true);
  }

  /// The character must vanish on [k, k]; brackets are expanded in the
  /// generators by least squares.
  void check_character_on_brackets() const {
    const int r = rank();
    if (r < 2) return;
    Eigen::MatrixXd basis(2 * dim * dim, r);
    for (int j = 0; j < r; ++j) {
      const CMatrix& e = generators[static_cast<std::size_t>(j)];
      for (int a = 0; a < dim * dim; ++a) {
        basis(a, j) = e.data()[a].real();
        basis(dim * dim + a, j) = e.data()[a].imag();
      }
    }
    const auto qr = basis.colPivHouseholderQr();
    for (int i = 0; i < r; ++i)
      for (int j = i + 1; j < r; ++j) {
        const CMatrix c = generators[static_cast<std::size_t>(i)] * generators[static_cast<std::size_t>(j)] -
                          generators[static_cast<std::size_t>(j)] * generators[static_cast<std::size_t>(i)];
        if (c.norm() < 1e-14) continue;
        Eigen::VectorXd v(2 * dim * dim);
        for (int a = 0; a < dim * dim; ++a) {
          v(a) = c.data()[a].real();
          v(dim * dim + a) = c.data()[a].imag();
        }
        const Eigen::VectorXd coef = qr.solve(v);
        if ((basis * coef - v).norm() > 1e-9 * std::max(1.0, v.norm()))
          throw InvalidProblem("generators do not span a Lie algebra");
        if (std::abs(character.dot(coef)) > 1e-10 * std::max(1.0, coef.norm()))
          throw InvalidProblem("character does not vanish on brackets");
      }
  }
};

/// exp(t H) for Hermitian H.
inline CMatrix hermitian_exp(const CMatrix& h, double t) {
  if ((h - CMatrix(h.diagonal().asDiagonal())).norm() == 0.0) {
    const Eigen::VectorXcd d = (t * h.diagonal().real()).array().exp().cast<std::complex<double>>();
    return d.asDiagonal();
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(0.5 * (h + h.adjoint()));
  const Eigen::VectorXd ev = (t * eig.eigenvalues()).array().exp();
  return eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().adjoint();
}

/// exp(i t X) for X in k given by coordinates.
inline CMatrix complex_exp(const LinearGitProblem& prob, const Eigen::VectorXd& x, double t) {
  return hermitian_exp(std::complex<double>(0.0, 1.0) * prob.algebra(x), t);
}

/// q expanded in an eigenbasis of iX, so that exp(itX) q = sum e^{t mu_i} c_i v_i.
struct RayExpansion {
  CMatrix basis;
  Eigen::VectorXd mu;
  CVector c;

  RayExpansion(const LinearGitProblem& prob, const Eigen::VectorXd& x, const CVector& q) {
    const CMatrix h = std::complex<double>(0.0, 1.0) * prob.algebra(x);
    if ((h - CMatrix(h.diagonal().asDiagonal())).norm() == 0.0) {
      basis = CMatrix::Identity(q.size(), q.size());
      mu = h.diagonal().real();
    } else {
      Eigen::SelfAdjointEigenSolver<CMatrix> eig(0.5 * (h + h.adjoint()));
      basis = eig.eigenvectors();
      mu = eig.eigenvalues();
    }
    c = basis.adjoint() * q;
  }

  /// Largest exponent carried by a component of modulus > floor * |q|
  /// (-inf for q = 0).
  double top(double floor = 0.0) const {
    const double cut = floor * c.norm();
    double m = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < c.size(); ++i)
      if (c(i) != std::complex<double>(0.0, 0.0) && std::abs(c(i)) > cut) m = std::max(m, mu(i));
    return m;
  }

  /// exp(itX) q; with `unit_scale` the result is divided by e^{t top()} so it
  /// neither underflows nor overflows. Zero components stay zero.
  CVector at(double t, bool unit_scale = false, double floor = 0.0) const {
    const double shift = unit_scale && c.norm() > 0.0 ? t * top(floor) : 0.0;
    const double cut = floor * c.norm();
    CVector out = CVector::Zero(c.size());
    for (Eigen::Index i = 0; i < c.size(); ++i)
      if (c(i) != std::complex<double>(0.0, 0.0) && std::abs(c(i)) > cut) out += (std::exp(t * mu(i) - shift) * c(i)) * basis.col(i);
    return out;
  }
};

/// exp(i t X) q.
inline CVector complex_flow(const LinearGitProblem& prob, const Eigen::VectorXd& x, double t,
                            const CVector& q) {
  return RayExpansion(prob, x, q).at(t);
}

/// Standard inner product <u, v> = sum u_i conj(v_i).
inline std::complex<double> herm(const CVector& u, const CVector& v) { return v.dot(u); }

/// Standard moment map X -> -(1/2) Im <Xp, p>, as coordinates in k.
inline Eigen::VectorXd moment_standard(const LinearGitProblem& prob, const CVector& p) {
  Eigen::VectorXd mu(prob.rank());
  for (int j = 0; j < prob.rank(); ++j)
    mu(j) = -0.5 * herm(prob.generators[static_cast<std::size_t>(j)] * p, p).imag();
  return mu;
}

/// Moment map of the problem's potential for omega = 2i ddbar f:
/// X -> d/dt f(exp(itX) p) = -2 phi'(|p|^2) Im <Xp, p>.
inline Eigen::VectorXd moment_potential(const LinearGitProblem& prob, const CVector& p) {
  const double d1 = prob.potential.d1(p.squaredNorm(), prob.hbar);
  Eigen::VectorXd mu(prob.rank());
  for (int j = 0; j < prob.rank(); ++j)
    mu(j) = -2.0 * d1 * herm(prob.generators[static_cast<std::size_t>(j)] * p, p).imag();
  return mu;
}

/// Central difference of t -> f(exp(itX) p) at t = 0.
inline double moment_from_potential(const std::function<double(const CVector&)>& f,
                                    const CMatrix& x, const CVector& p,
                                    double fd_step = defaults::kFdStep) {
  const CMatrix h = std::complex<double>(0.0, 1.0) * x;
  const double plus = f(hermitian_exp(h, fd_step) * p);
  const double minus = f(hermitian_exp(h, -fd_step) * p);
  return (plus - minus) / (2.0 * fd_step);
}

/// xi = a i d chi with a = 1/(2 pi hbar), as coordinates: xi_j = -a lambda_j.
inline Eigen::VectorXd shift_from_character(const LinearGitProblem& prob) {
  return -prob.shift_scale() * prob.character;
}

/// max |xi([e_i, e_j])| over basis pairs, with brackets expanded by least squares.
inline double shift_centrality_residual(const LinearGitProblem& prob) {
  const Eigen::VectorXd xi = shift_from_character(prob);
  const int r = prob.rank(), n = prob.dim;
  if (r < 2) return 0.0;
  Eigen::MatrixXd basis(2 * n * n, r);
  for (int j = 0; j < r; ++j)
    for (int a = 0; a < n * n; ++a) {
      basis(a, j) = prob.generators[static_cast<std::size_t>(j)].data()[a].real();
      basis(n * n + a, j) = prob.generators[static_cast<std::size_t>(j)].data()[a].imag();
    }
  const auto qr = basis.colPivHouseholderQr();
  double worst = 0.0;
  for (int i = 0; i < r; ++i)
    for (int j = i + 1; j < r; ++j) {
      const CMatrix c = prob.generators[static_cast<std::size_t>(i)] * prob.generators[static_cast<std::size_t>(j)] -
                        prob.generators[static_cast<std::size_t>(j)] * prob.generators[static_cast<std::size_t>(i)];
      Eigen::VectorXd v(2 * n * n);
      for (int a = 0; a < n * n; ++a) {
        v(a) = c.data()[a].real();
        v(n * n + a) = c.data()[a].imag();
      }
      worst = std::max(worst, std::abs(xi.dot(qr.solve(v))));
    }
  return worst;
}

/// Shifted moment map mu_f - xi at p.
inline Eigen::VectorXd moment_shifted(const LinearGitProblem& prob, const CVector& p) {
  return moment_potential(prob, p) - shift_from_character(prob);
}

/// A point of G acting on C^N together with log|chi| at it.
struct GroupPoint {
  CMatrix g;
  double log_abs_chi = 0.0;

  static GroupPoint identity(int n) { return {CMatrix::Identity(n, n), 0.0}; }

  /// g = exp(i S) k with S in coordinates and k unitary in the image of K:
  /// |chi(g)| = exp(-lambda . S).
  static GroupPoint from_polar(const LinearGitProblem& prob, const Eigen::VectorXd& s,
                               const CMatrix& k) {
    return {complex_exp(prob, s, 1.0) * k, -prob.character.dot(s)};
  }

  /// exp(itX) g.
  GroupPoint moved(const LinearGitProblem& prob, const Eigen::VectorXd& x, double t) const {
    return {complex_exp(prob, x, t) * g, log_abs_chi - t * prob.character.dot(x)};
  }
};

/// F(g) = f(g p) - (1 / 2 pi hbar) log|chi(g)|. Returns -infinity when g p = 0
/// for a potential that is singular at 0.
inline double kn_value(const LinearGitProblem& prob, const CVector& p, const GroupPoint& g) {
  const CVector q = g.g * p;
  const double s = q.squaredNorm();
  if (s == 0.0 && !prob.potential.defined_at_zero()) return -std::numeric_limits<double>::infinity();
  return prob.potential.value(s, prob.hbar) - prob.shift_scale() * g.log_abs_chi;
}

namespace detail {

/// First and second derivative of t -> F(exp(itX) g) at t = 0, written in
/// terms of q = g p.
inline std::pair<double, double> kn_ray_derivatives(const LinearGitProblem& prob, const CVector& q,
                                                    const Eigen::VectorXd& x) {
  const CMatrix xm = prob.algebra(x);
  const CVector xq = xm * q;
  const double s = q.squaredNorm();
  const double ds = -2.0 * herm(xq, q).imag();  // d/dt |q|^2 = 2 Re <iXq, q>
  const double d1 = prob.potential.d1(s, prob.hbar), d2 = prob.potential.d2(s, prob.hbar);
  const double xi = shift_from_character(prob).dot(x);
  return {d1 * ds - xi, d2 * ds * ds + 4.0 * d1 * xq.squaredNorm()};
}

/// Gradient and Hessian of Delta -> F(exp(i Delta) g) at Delta = 0.
inline void kn_local_model(const LinearGitProblem& prob, const CVector& q, Eigen::VectorXd& grad,
                           Eigen::MatrixXd& hess) {
  const int r = prob.rank();
  const double s = q.squaredNorm();
  const double d1 = prob.potential.d1(s, prob.hbar), d2 = prob.potential.d2(s, prob.hbar);
  std::vector<CVector> eq(static_cast<std::size_t>(r));
  Eigen::VectorXd ds(r);
  for (int j = 0; j < r; ++j) {
    eq[static_cast<std::size_t>(j)] = prob.generators[static_cast<std::size_t>(j)] * q;
    ds(j) = -2.0 * herm(eq[static_cast<std::size_t>(j)], q).imag();
  }
  grad = d1 * ds - shift_from_character(prob);
  hess.resize(r, r);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j)
      hess(i, j) = d2 * ds(i) * ds(j) + 4.0 * d1 * herm(eq[static_cast<std::size_t>(i)], eq[static_cast<std::size_t>(j)]).real();
}

}  // namespace detail

struct KnDerivatives {
  double first = 0.0;
  double first_fd = 0.0;
  double second = 0.0;
  double second_fd = 0.0;
};

/// Derivatives of t -> F(exp(itX)) at t, analytic and by five-point
/// finite differences.
inline KnDerivatives kn_derivatives(const LinearGitProblem& prob, const CVector& p,
                                    const Eigen::VectorXd& x, double t,
                                    double fd_step = defaults::kKnFdStep) {
  const auto base = GroupPoint::identity(prob.dim);
  const auto at = [&](double s) { return kn_value(prob, p, base.moved(prob, x, s)); };
  const CVector q = complex_exp(prob, x, t) * p;
  if (q.squaredNorm() == 0.0 && !prob.potential.defined_at_zero())
    throw DomainError("exp(itX) p = 0: Kempf-Ness function is -infinity");
  KnDerivatives out;
  std::tie(out.first, out.second) = detail::kn_ray_derivatives(prob, q, x);
  const double h = fd_step;
  const double fm2 = at(t - 2 * h), fm1 = at(t - h), f0 = at(t), fp1 = at(t + h), fp2 = at(t + 2 * h);
  out.first_fd = (fm2 - 8 * fm1 + 8 * fp1 - fp2) / (12 * h);
  out.second_fd = (-fm2 + 16 * fm1 - 30 * f0 + 16 * fp1 - fp2) / (12 * h * h);
  return out;
}

enum class Verdict { semistable, unstable, undecided };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::semistable: return "semistable";
    case Verdict::unstable: return "unstable";
    default: return "undecided";
  }
}

struct KnState {
  GroupPoint point;       // current g
  Eigen::VectorXd s;      // accumulated exp(i S) displacement (exact on tori)
  double value = 0.0;
  Eigen::VectorXd gradient;  // shifted moment map at g p
  int iterations = 0;
};

struct KnWitness {
  // semistable: residual of the shifted moment map at the final point.
  double moment_residual = std::numeric_limits<double>::quiet_NaN();
  // unstable: unit destabilizing direction X and the slope bound along it.
  Eigen::VectorXd direction;
  double slope = std::numeric_limits<double>::quiet_NaN();
  double escape_time = std::numeric_limits<double>::quiet_NaN();
};

struct KnOptions {
  double tol = defaults::kKnTol;
  int max_iter = defaults::kKnMaxIter;
  /// Instability margin; nonpositive means the default 1e-3 / (4 pi hbar).
  double destab_margin = 0.0;
  double trust_radius = 4.0;
  std::uint64_t seed = 0;
};

struct KnResult {
  Verdict verdict = Verdict::undecided;
  KnState state;
  KnWitness witness;
};

namespace detail {

inline double rounding_floor(const LinearGitProblem& prob) { return prob.abelian() ? 0.0 : 1e-12; }

/// Limit as T -> infinity of the slope of T -> F(exp(iTX) g), from the
/// weights of q = g p along X. NaN for radial potentials.
inline double limit_slope(const LinearGitProblem& prob, const RayExpansion& ray, const Eigen::VectorXd& x) {
  const double xi = shift_from_character(prob).dot(x);
  // For a nonabelian group q is only known up to rounding in the eigenbasis
  // of iX, so components at that level are ignored.
  const double top = ray.top(rounding_floor(prob));
  // weights below this count as zero
  const double tol = 1e-10 * std::max(1.0, x.norm());
  switch (prob.potential.kind) {
    case Potential::Kind::standard:
      return top > tol ? std::numeric_limits<double>::infinity() : -xi;
    case Potential::Kind::log_norm:
      return 2.0 * (std::abs(top) <= tol ? 0.0 : top) / (4.0 * std::numbers::pi * prob.hbar) - xi;
    default:
      return std::numeric_limits<double>::quiet_NaN();
  }
}

/// Certifies instability along the ray T -> exp(iTX) g. By convexity the
/// slope is nondecreasing in T, so a limit slope <= -margin bounds it for all
/// T >= 0. The sampled slopes at T = 2^k, k = 0..12 must agree.
inline bool instability_certificate(const LinearGitProblem& prob, const CVector& q,
                                    const Eigen::VectorXd& x, double margin, double* slope) {
  const RayExpansion ray(prob, x, q);
  const double limit = limit_slope(prob, ray, x);
  if (!(limit <= -margin)) return false;
  const bool projective = prob.potential.kind == Potential::Kind::log_norm;
  for (int k = 0; k <= 12; ++k) {
    const CVector qt = ray.at(std::ldexp(1.0, k), projective, rounding_floor(prob));
    if (!qt.allFinite()) return false;
    const double d = kn_ray_derivatives(prob, qt, x).first;
    if (!(d <= -margin) || d > limit + 1e-9 * std::max(1.0, std::abs(limit))) return false;
  }
  *slope = limit;
  return true;
}

/// Minimizer of the model g.d + d.H d / 2 over |d| <= radius (H >= 0).
inline Eigen::VectorXd trust_region_step(const Eigen::MatrixXd& hess, const Eigen::VectorXd& grad,
                                         double radius) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hess);
  const Eigen::VectorXd gc = eig.eigenvectors().transpose() * grad;
  const Eigen::VectorXd h = eig.eigenvalues().cwiseMax(0.0);
  const double floor = 1e-12 * std::max(1.0, h.maxCoeff());
  const auto step = [&](double m) {
    Eigen::VectorXd d(gc.size());
    for (Eigen::Index i = 0; i < gc.size(); ++i) d(i) = -gc(i) / (h(i) + m);
    return d;
  };
  Eigen::VectorXd d = step(floor);
  if (d.norm() <= radius) return eig.eigenvectors() * d;
  double lo = floor, hi = std::max(floor, grad.norm() / radius);
  while (step(hi).norm() > radius) hi *= 2.0;
  for (int it = 0; it < 100 && hi - lo > 1e-14 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (step(mid).norm() > radius ? lo : hi) = mid;
  }
  return eig.eigenvectors() * step(hi);
}

}  // namespace detail

/// Numerical semistability classifier: regularized Newton descent of F over
/// g -> exp(i Delta) g with Armijo backtracking, a trust radius and random
/// restarts on stalls. Semistable once the shifted moment map vanishes to
/// `tol`; unstable once a ray with slope <= -margin is certified.
inline KnResult kn_minimize(const LinearGitProblem& prob, const CVector& p, const KnOptions& opt = {}) {
  if (p.size() != prob.dim) throw InvalidProblem("point has the wrong dimension");
  const int r = prob.rank();
  const double margin = opt.destab_margin > 0.0 ? opt.destab_margin
                                                : 1e-3 / (4.0 * std::numbers::pi * prob.hbar);
  KnResult res;
  res.state.point = GroupPoint::identity(prob.dim);
  res.state.s = Eigen::VectorXd::Zero(r);
  const Eigen::VectorXd xi = shift_from_character(prob);

  if (p.squaredNorm() == 0.0) {
    // F is linear along every ray: semistable iff xi = 0.
    res.state.gradient = -xi;
    if (!prob.potential.defined_at_zero()) throw DomainError("p = 0 is outside the domain of F");
    res.state.value = kn_value(prob, p, res.state.point);
    if (xi.norm() < opt.tol) {
      res.verdict = Verdict::semistable;
      res.witness.moment_residual = xi.norm();
    } else {
      res.verdict = Verdict::unstable;
      res.witness.direction = xi / xi.norm();
      res.witness.slope = -xi.norm();
      res.witness.escape_time = 0.0;
    }
    return res;
  }

  Rng rng = make_rng(opt.seed, 0x6b6e);
  std::normal_distribution<double> normal(0.0, 1.0);
  CVector q = p;
  GroupPoint& g = res.state.point;
  const auto value_at = [&](const CVector& qq, double log_chi) {
    return prob.potential.value(qq.squaredNorm(), prob.hbar) - prob.shift_scale() * log_chi;
  };
  // Under the log potential only the ray of q matters: q is kept at unit
  // norm and the dropped log-scale is carried in `offset`.
  const bool projective = prob.potential.kind == Potential::Kind::log_norm;
  double offset = 0.0;
  const auto renormalize = [&] {
    if (!projective) return;
    const double nq = q.norm();
    q /= nq;
    offset += 2.0 * std::log(nq) / (4.0 * std::numbers::pi * prob.hbar);
  };
  renormalize();
  double f = value_at(q, g.log_abs_chi) + offset;
  const auto move = [&](const CVector& qn, const Eigen::VectorXd& x, double t) {
    g.g = complex_exp(prob, x, t) * g.g;
    g.log_abs_chi -= t * prob.character.dot(x);
    res.state.s += t * x;
    q = qn;
    renormalize();
    f = value_at(q, g.log_abs_chi) + offset;
  };
  int stalls = 0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
  for (int it = 0; it < opt.max_iter; ++it) {
    res.state.iterations = it;
    detail::kn_local_model(prob, q, grad, hess);
    res.state.gradient = grad;
    res.state.value = f;
    const double gn = grad.norm();
    if (gn < opt.tol) {
      res.verdict = Verdict::semistable;
      res.witness.moment_residual = gn;
      return res;
    }
    // Trust-region Newton step (H + m) d = -grad with |d| <= trust radius,
    // so that flat directions do not swamp the curved ones.
    Eigen::VectorXd dir = detail::trust_region_step(hess, grad, opt.trust_radius);
    if (!dir.allFinite() || grad.dot(dir) >= 0.0) dir = -grad * std::min(1.0, opt.trust_radius / gn);
    // Try to certify instability along the descent directions.
    if (gn >= margin) {
      for (const Eigen::VectorXd& cand : {Eigen::VectorXd(-grad / gn), Eigen::VectorXd(dir / dir.norm())}) {
        double slope = 0.0;
        if (detail::instability_certificate(prob, q, cand, margin, &slope)) {
          res.verdict = Verdict::unstable;
          res.witness.direction = cand;
          res.witness.slope = slope;
          res.witness.escape_time = 0.0;
          return res;
        }
      }
    }
    // Armijo backtracking along exp(i t dir); the slack absorbs rounding in
    // F once the predicted decrease is below machine precision.
    const double slope0 = grad.dot(dir);
    const double slack = 1e-14 * std::max(1.0, std::abs(f));
    double t = 1.0;
    bool accepted = false;
    for (int half = 0; half < 40 && !accepted; ++half, t *= 0.5) {
      const CVector qn = complex_flow(prob, dir, t, q);
      const double lc = g.log_abs_chi - t * prob.character.dot(dir);
      const double fn = value_at(qn, lc) + offset;
      if (std::isfinite(fn) && fn <= f + 1e-4 * t * slope0 + slack) {
        move(qn, dir, t);
        accepted = true;
      }
    }
    if (!accepted) {
      if (++stalls > 5) break;
      // Restart from a random nearby point on the orbit.
      Eigen::VectorXd z(r);
      for (int j = 0; j < r; ++j) z(j) = normal(rng);
      move(complex_flow(prob, z, 0.1, q), z, 0.1);
    }
  }
  detail::kn_local_model(prob, q, grad, hess);
  res.state.gradient = grad;
  res.state.value = f;
  res.state.iterations = opt.max_iter;
  res.verdict = Verdict::undecided;
  res.witness.moment_residual = grad.norm();
  return res;
}

}  // namespace nahmkn
