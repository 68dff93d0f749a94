#pragma once

// The chart psi: K x W -> G x g and the quantities defined on it: the Kahler
// potential rho, the hyperkahler moment map in K x W coordinates, and the
// identities relating them to the complex-symplectic picture on G x g.
//
// psi(e^Y, X) = (g(1), X2 + i X3) where g' = g (Y + i Ad_{e^{-tY}} P1^X(t)),
// g(0) = 1.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "nahmkn/config.hpp"
#include "nahmkn/errors.hpp"
#include "nahmkn/lie.hpp"
#include "nahmkn/nahm_flow.hpp"
#include "nahmkn/quadrature.hpp"

namespace nahmkn {

struct ModuliPoint {
  Matrix k;  // in SU(n)
  Triple x;  // in W

  int rank() const { return static_cast<int>(k.rows()); }

  /// Validates k in SU(n) and X in W (membership verdict must be inside).
  static ModuliPoint make(Matrix k, Triple x, bool check_membership = true) {
    if (k.rows() != x[0].rows()) throw RankMismatch("k and X have different rank");
    if (!is_special_unitary(k)) throw InvalidElement("k is not in SU(n)");
    checked_triple(x, 1e-10);
    if (check_membership) {
      const auto m = membership_W_detail(x);
      if (m.verdict != Membership::inside)
        throw OutsideDomain(std::string("X is not inside W (") + to_string(m.verdict) + ")", m.blowup_time);
    }
    return {std::move(k), std::move(x)};
  }
};

struct CotangentPoint {
  Matrix g;  // in SL(n, C)
  Matrix y;  // in sl(n, C)

  int rank() const { return static_cast<int>(g.rows()); }

  static CotangentPoint make(Matrix g, Matrix y) {
    if (g.rows() != y.rows()) throw RankMismatch("g and Y have different rank");
    if (std::abs(g.determinant() - 1.0) > defaults::kGroupTol * std::max(1.0, g.norm()))
      throw InvalidElement("det g is not 1");
    if (!is_traceless(y)) throw InvalidElement("Y is not traceless");
    return {std::move(g), std::move(y)};
  }
};

/// Three pairs (m^0, m^1) in k x k, one for each complex structure I, J, K.
struct HkMomentValue {
  std::array<std::pair<Matrix, Matrix>, 3> m;
};

/// (k1, k2) . (k, X) = (k1 k k2^-1, Ad_{k1} X).
inline ModuliPoint act(const Matrix& k1, const Matrix& k2, const ModuliPoint& p) {
  return {k1 * p.k * k2.adjoint(), adjoint_triple(k1, p.x)};
}

/// (k1, k2) . (g, Y) = (k1 g k2^-1, Ad_{k1} Y).
inline CotangentPoint act(const Matrix& k1, const Matrix& k2, const CotangentPoint& q) {
  return {k1 * q.g * k2.inverse(), adjoint_action(k1, q.y)};
}

inline Matrix complex_part(const Triple& x) { return x[1] + kI * x[2]; }

struct MapOptions {
  double step = defaults::kStep;
  double branch_tol = defaults::kBranchTol;
};

namespace detail {

/// A direction for the first variation of psi: the variation of Y0 and the
/// variation of P1 along the grid (empty when P is not varied).
struct PsiDirection {
  Matrix dy0;
  std::vector<Matrix> dp1;
};

struct PsiEval {
  Matrix g1;
  std::vector<Matrix> dg1;     // left-trivialized: g(1)^-1 dg(1)
  std::vector<Matrix> g_path;  // g at even nodes (when requested)
  double grid = 0.0;           // spacing of g_path
};

/// Divided difference of lambda -> exp(-t lambda) at (a, b).
inline Complex exp_divided_difference(double t, Complex a, Complex b) {
  const Complex d = 0.5 * t * (a - b);
  const Complex sinhc = std::abs(d) < 1e-6 ? 1.0 + d * d / 6.0 : std::sinh(d) / d;
  return -t * std::exp(-0.5 * t * (a + b)) * sinhc;
}

/// Integrates g' = g B(t) with RK4 at step 2h, using odd grid nodes as the
/// midpoints, together with the variations along each direction.
inline PsiEval psi_eval(const Matrix& y0, const ReducedSolution& sol,
                        const std::vector<PsiDirection>& dirs, bool keep_path) {
  if (!sol.complete()) throw OutsideDomain("reduced flow blows up before t = 1", sol.blowup_time);
  const int n = sol.rank();
  const std::size_t nodes = sol.values.size();
  const double h = sol.step;
  const UnitaryPath path(project_compact(y0));
  const Matrix& u = path.basis();
  const Eigen::VectorXd& theta = path.angles();

  std::vector<Matrix> ap(nodes), b(nodes);
  std::vector<Matrix> e(nodes);
  for (std::size_t j = 0; j < nodes; ++j) {
    e[j] = path(-sol.times[j]);
    ap[j] = adjoint_unitary(e[j], sol.values[j][0]);
    b[j] = y0 + kI * ap[j];
  }
  std::vector<std::vector<Matrix>> db(dirs.size(), std::vector<Matrix>(nodes));
  for (std::size_t d = 0; d < dirs.size(); ++d) {
    const Matrix yt = u.adjoint() * dirs[d].dy0 * u;
    const bool vary_y = yt.norm() > 0.0;
    for (std::size_t j = 0; j < nodes; ++j) {
      const double t = sol.times[j];
      Matrix m = zeros(n);
      if (vary_y) {
        Matrix dd(n, n);
        for (int r = 0; r < n; ++r)
          for (int c = 0; c < n; ++c)
            dd(r, c) = exp_divided_difference(t, kI * theta(r), kI * theta(c)) * yt(r, c) *
                       std::exp(kI * (t * theta(c)));
        m = commutator(u * dd * u.adjoint(), ap[j]);  // [dE E^-1, Ad_E P1]
      }
      if (!dirs[d].dp1.empty()) m += adjoint_unitary(e[j], dirs[d].dp1[j]);
      db[d][j] = dirs[d].dy0 + kI * m;
    }
  }

  const double step = 2.0 * h;
  Matrix g = identity(n);
  std::vector<Matrix> dg(dirs.size(), zeros(n));
  PsiEval out;
  out.grid = step;
  if (keep_path) out.g_path.push_back(g);
  for (std::size_t a = 0; a + 2 < nodes; a += 2) {
    const std::size_t m = a + 1, c = a + 2;
    const Matrix k1 = g * b[a];
    const Matrix g2 = g + 0.5 * step * k1;
    const Matrix k2 = g2 * b[m];
    const Matrix g3 = g + 0.5 * step * k2;
    const Matrix k3 = g3 * b[m];
    const Matrix g4 = g + step * k3;
    const Matrix k4 = g4 * b[c];
    for (std::size_t d = 0; d < dirs.size(); ++d) {
      const Matrix l1 = dg[d] * b[a] + g * db[d][a];
      const Matrix l2 = (dg[d] + 0.5 * step * l1) * b[m] + g2 * db[d][m];
      const Matrix l3 = (dg[d] + 0.5 * step * l2) * b[m] + g3 * db[d][m];
      const Matrix l4 = (dg[d] + step * l3) * b[c] + g4 * db[d][c];
      dg[d] += (step / 6.0) * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
    }
    g += (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (keep_path) out.g_path.push_back(g);
  }
  out.g1 = g;
  const Matrix ginv = g.inverse();
  for (auto& d : dg) out.dg1.push_back(project_traceless(ginv * d));
  return out;
}

/// Variation of Y0 = log k induced by k -> k exp(s V0): in the eigenbasis of
/// Y0 the entries are V0_jk / f(i (theta_j - theta_k)), f(z) = (1 - e^-z)/z.
inline Matrix dlog_right(const Matrix& y0, const Matrix& v0) {
  const UnitaryPath path(y0);
  const Matrix& u = path.basis();
  const Eigen::VectorXd& th = path.angles();
  Matrix vt = u.adjoint() * v0 * u;
  const int n = static_cast<int>(y0.rows());
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      const Complex z = kI * (th(r) - th(c));
      const Complex f = std::abs(z) < 1e-8 ? 1.0 - 0.5 * z : (1.0 - std::exp(-z)) / z;
      if (std::abs(f) < 1e-12) throw BranchAmbiguity("logarithm is singular at this k");
      vt(r, c) /= f;
    }
  return project_compact(u * vt * u.adjoint());
}

inline FlowOptions flow_options(const MapOptions& opt) {
  FlowOptions f;
  f.step = opt.step;
  return f;
}

}  // namespace detail

/// psi evaluated through an explicit logarithm Y0 of k (any branch).
inline CotangentPoint psi_from_log(const Matrix& y0, const Triple& x, const MapOptions& opt = {}) {
  const auto sol = integrate_reduced(x, detail::flow_options(opt));
  const auto ev = detail::psi_eval(y0, sol, {}, false);
  return {ev.g1, project_traceless(complex_part(x))};
}

inline Matrix log_of(const Matrix& k, const MapOptions& opt = {}) {
  return log_principal(GroupElement::special_unitary(k, 1e-9), opt.branch_tol).matrix();
}

inline CotangentPoint psi(const ModuliPoint& p, const MapOptions& opt = {}) {
  return psi_from_log(log_of(p.k, opt), p.x, opt);
}

/// Trajectory data of the psi ODE, used by the growth estimates.
struct PsiTrajectory {
  CotangentPoint value;
  ReducedSolution flow;
  std::vector<Matrix> g_path;  // g at t = 0, 2h, 4h, ..., 1
  double g_step = 0.0;
  Matrix y0;
};

inline PsiTrajectory psi_trajectory(const ModuliPoint& p, const MapOptions& opt = {}) {
  PsiTrajectory tr;
  tr.y0 = log_of(p.k, opt);
  tr.flow = integrate_reduced(p.x, detail::flow_options(opt));
  auto ev = detail::psi_eval(tr.y0, tr.flow, {}, true);
  tr.value = {ev.g1, project_traceless(complex_part(p.x))};
  tr.g_path = std::move(ev.g_path);
  tr.g_step = ev.grid;
  return tr;
}

/// Tangent vector at a point of G x g, left-trivialized in the G factor.
struct CotangentTangent {
  Matrix dg;  // g^-1 dg
  Matrix dy;
};

/// Directional derivative of psi along the curve s -> (k exp(s V0), X + s V)
/// from the first-variation equations.
inline CotangentTangent dpsi(const ModuliPoint& p, const std::array<Matrix, 4>& v,
                             const MapOptions& opt = {}) {
  const Matrix y0 = log_of(p.k, opt);
  const Triple dv{v[1], v[2], v[3]};
  const auto [sol, dp] = integrate_reduced_tangent(p.x, dv, detail::flow_options(opt));
  detail::PsiDirection dir;
  dir.dy0 = detail::dlog_right(y0, v[0]);
  for (const auto& t : dp) dir.dp1.push_back(t[0]);
  const auto ev = detail::psi_eval(y0, sol, {dir}, false);
  return {ev.dg1.front(), project_traceless(v[2] + kI * v[3])};
}

/// Coordinates of Z = A + iB in g = k + ik against an orthonormal basis of k.
inline Eigen::VectorXd real_coordinates(const Matrix& z, const std::vector<Matrix>& basis) {
  const auto [a, b] = split_complex(z);
  const auto m = static_cast<Eigen::Index>(basis.size());
  Eigen::VectorXd out(2 * m);
  out.head(m) = coordinates(a, basis);
  out.tail(m) = coordinates(b, basis);
  return out;
}

struct InverseOptions {
  MapOptions map;
  double tol = defaults::kNewtonTol;
  double target = defaults::kNewtonTarget;
  int max_iter = defaults::kNewtonMaxIter;
  std::optional<ModuliPoint> initial;  // warm start
};

struct InverseResult {
  ModuliPoint point;
  double residual = 0.0;
  int iterations = 0;
};

namespace detail {

inline Matrix group_residual(const Matrix& g, const Matrix& target, double branch_tol) {
  const Matrix q = g.inverse() * target;
  const int n = static_cast<int>(q.rows());
  // The general (non-unitary) logarithm is needed even when q is close to
  // unitary: the Hermitian part of the residual is what moves X1.
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> eig(Eigen::MatrixXcd(q), false);
  for (int j = 0; j < n; ++j) {
    const Complex lambda = eig.eigenvalues()(j);
    if (lambda.real() <= 0.0 && std::abs(lambda.imag()) <= branch_tol + 1e-3 * std::abs(lambda))
      return project_traceless(q - identity(n));
  }
  return project_traceless(Matrix(q.log()));
}

/// Polar decomposition g = k exp(iS) with k unitary and iS Hermitian.
inline std::pair<Matrix, Matrix> polar(const Matrix& g) {
  const Eigen::MatrixXcd gg = g.adjoint() * g;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(0.5 * (gg + gg.adjoint()));
  const int n = static_cast<int>(g.rows());
  Eigen::MatrixXcd logp = Eigen::MatrixXcd::Zero(n, n), pinv = Eigen::MatrixXcd::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    const double s = std::max(eig.eigenvalues()(j), 1e-300);
    logp(j, j) = 0.5 * std::log(s);
    pinv(j, j) = 1.0 / std::sqrt(s);
  }
  const Eigen::MatrixXcd& v = eig.eigenvectors();
  const Matrix k = g * (v * pinv * v.adjoint());
  const Matrix s = -kI * (v * logp * v.adjoint());  // skew-Hermitian
  return {k, project_compact(s)};
}

}  // namespace detail

/// Newton shooting for psi^-1. X2, X3 are read off from Y; (k, X1) solve
/// psi(k, X)_G = g with the Jacobian from the variational equations.
inline InverseResult psi_inverse(const CotangentPoint& q, const InverseOptions& opt = {}) {
  const int n = q.rank();
  const auto basis = compact_basis(n);
  const auto dim = static_cast<Eigen::Index>(basis.size());
  const auto [x2, x3] = split_complex(q.y);
  Triple x{zeros(n), project_compact(x2), project_compact(x3)};
  Matrix k;
  if (opt.initial) {
    k = opt.initial->k;
    x[0] = opt.initial->x[0];
  } else {
    auto [kp, s] = detail::polar(q.g);
    k = kp;
    x[0] = s;
  }
  const FlowOptions fopt = detail::flow_options(opt.map);

  const auto evaluate = [&](const Matrix& kk, const Triple& xx, bool jac, Eigen::MatrixXd* jm,
                            Matrix* res) -> bool {
    Matrix y0;
    try {
      y0 = log_of(kk, opt.map);
    } catch (const BranchAmbiguity&) {
      // Any logarithm gives the same value of psi; take one on the cut.
      y0 = log_principal(GroupElement::special_unitary(kk, 1e-9), 0.0).matrix();
    }
    std::vector<detail::PsiDirection> dirs;
    ReducedSolution sol;
    if (jac) {
      dirs.reserve(2 * basis.size());
      for (const auto& e : basis) dirs.push_back({detail::dlog_right(y0, e), {}});
      for (const auto& e : basis) {
        auto [s, dp] = integrate_reduced_tangent(xx, {e, zeros(n), zeros(n)}, fopt);
        if (!s.complete()) return false;
        detail::PsiDirection d{zeros(n), {}};
        for (const auto& t : dp) d.dp1.push_back(t[0]);
        dirs.push_back(std::move(d));
        sol = std::move(s);
      }
    } else {
      sol = integrate_reduced(xx, fopt);
    }
    if (!sol.complete()) return false;
    const auto ev = detail::psi_eval(y0, sol, dirs, false);
    *res = detail::group_residual(ev.g1, q.g, opt.map.branch_tol);
    if (jac) {
      jm->resize(2 * dim, 2 * dim);
      for (std::size_t j = 0; j < dirs.size(); ++j)
        jm->col(static_cast<Eigen::Index>(j)) = real_coordinates(ev.dg1[j], basis);
    }
    return true;
  };

  Eigen::MatrixXd jm;
  Matrix r;
  if (!evaluate(k, x, true, &jm, &r))
    throw OutsideDomain("initial guess for psi^-1 lies outside W", 0.0);
  double rn = frobenius(r);
  int it = 0;
  for (; it < opt.max_iter && rn > opt.target; ++it) {
    const Eigen::VectorXd rhs = real_coordinates(r, basis);
    const Eigen::VectorXd delta = jm.colPivHouseholderQr().solve(rhs);
    const Matrix v0 = from_coordinates(delta.head(dim), basis);
    const Matrix v1 = from_coordinates(delta.tail(dim), basis);
    double alpha = 1.0;
    bool accepted = false;
    Matrix kn;
    Triple xn;
    Matrix rn_mat;
    Eigen::MatrixXd jn;
    int collisions = 0;
    for (int half = 0; half < 30; ++half, alpha *= 0.5) {
      kn = k * UnitaryPath(project_compact(alpha * v0))(1.0);
      xn = x;
      xn[0] = project_compact(x[0] + alpha * v1);
      if (!evaluate(kn, xn, false, nullptr, &rn_mat)) {
        ++collisions;
        continue;
      }
      if (frobenius(rn_mat) < rn || half >= 12) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (collisions > 0) throw OutsideDomain("psi^-1 damping collided with the boundary of W", 0.0);
      break;
    }
    const double new_rn = frobenius(rn_mat);
    if (new_rn >= rn && rn < opt.tol) break;  // stagnated below tolerance
    k = kn;
    x = xn;
    evaluate(k, x, true, &jm, &r);
    rn = frobenius(r);
  }
  if (!(rn < opt.tol)) throw NoPreimage("Newton shooting did not converge", rn);
  return {ModuliPoint{k, x}, rn, it};
}

/// rho(X) = (1/4) int_0^1 (2|P1|^2 + |P2|^2 + |P3|^2) dt by composite Simpson.
inline double potential_rho(const ReducedSolution& sol) {
  if (!sol.complete()) throw OutsideDomain("X is outside W", sol.blowup_time);
  std::vector<double> f(sol.values.size());
  for (std::size_t j = 0; j < f.size(); ++j) {
    const auto& p = sol.values[j];
    f[j] = 0.25 * (2.0 * inner(p[0], p[0]) + inner(p[1], p[1]) + inner(p[2], p[2]));
  }
  return simpson(f, sol.step);
}

inline double potential_rho(const Triple& x, const MapOptions& opt = {}) {
  return potential_rho(integrate_reduced(x, detail::flow_options(opt)));
}

/// Hyperkahler moment map: component a is (X_a, -Ad_{k^-1} P_a(1)).
inline HkMomentValue moment_hk(const ModuliPoint& p, const MapOptions& opt = {}) {
  const auto sol = integrate_reduced(p.x, detail::flow_options(opt));
  if (!sol.complete()) throw OutsideDomain("X is outside W", sol.blowup_time);
  const Triple& p1 = sol.final_value();
  HkMomentValue out;
  for (int a = 0; a < 3; ++a)
    out.m[a] = {p.x[a], project_compact(-adjoint_unitary(p.k.adjoint(), p1[a]))};
  return out;
}

/// Residual between mu_C = mu_J + i mu_K and Phi(psi(p)) = (Y, -Ad_{g^-1} Y).
inline double moment_complex_check(const ModuliPoint& p, const MapOptions& opt = {}) {
  const auto mu = moment_hk(p, opt);
  const Matrix c0 = mu.m[1].first + kI * mu.m[2].first;
  const Matrix c1 = mu.m[1].second + kI * mu.m[2].second;
  const auto q = psi(p, opt);
  const Matrix phi0 = q.y;
  const Matrix phi1 = -adjoint_action(q.g.inverse(), q.y);
  return std::max(frobenius(c0 - phi0), frobenius(c1 - phi1));
}

struct PotentialMomentCheck {
  double left = 0.0;
  double right = 0.0;
  double residual = 0.0;
};

/// Compares <mu_I, Z> with the derivative of rho o psi^-1 along the complexified
/// K x K action t -> (e^{itZ1} g e^{-itZ2}, Ad_{e^{itZ1}} Y).
inline PotentialMomentCheck verify_potential_moment(const ModuliPoint& p, const Matrix& z1,
                                                    const Matrix& z2, const InverseOptions& iopt = {},
                                                    double fd_step = defaults::kFdStepInverse) {
  const auto mu = moment_hk(p, iopt.map);
  PotentialMomentCheck out;
  out.left = inner(mu.m[0].first, z1) + inner(mu.m[0].second, z2);
  const auto q = psi(p, iopt.map);
  const auto f = [&](double t) {
    const Matrix a = matrix_exp(kI * t * z1), b = matrix_exp(-kI * t * z2);
    const CotangentPoint qt{a * q.g * b, adjoint_action(a, q.y)};
    InverseOptions o = iopt;
    o.initial = p;
    const auto inv = psi_inverse(qt, o);
    return potential_rho(inv.point.x, iopt.map);
  };
  out.right = (f(fd_step) - f(-fd_step)) / (2.0 * fd_step);
  out.residual = std::abs(out.left - out.right);
  return out;
}

}  // namespace nahmkn
