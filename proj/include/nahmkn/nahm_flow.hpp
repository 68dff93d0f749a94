#pragma once

// Nahm equations on [0, 1]:
//   A1' + [A0, A1] + [A2, A3] = 0   (and cyclic in 1, 2, 3)
// and the reduced system obtained in temporal gauge A0 = 0:
//   P1' + [P2, P3] = 0              (and cyclic).

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

#include "nahmkn/config.hpp"
#include "nahmkn/errors.hpp"
#include "nahmkn/lie.hpp"

namespace nahmkn {

using Triple = std::array<Matrix, 3>;
using Quadruple = std::array<Matrix, 4>;

inline Triple zero_triple(int n) { return {zeros(n), zeros(n), zeros(n)}; }

inline Triple su2_triple() { return su2_basis(); }

inline double triple_norm(const Triple& x) {
  return std::sqrt(inner(x[0], x[0]) + inner(x[1], x[1]) + inner(x[2], x[2]));
}

inline Triple scaled(const Triple& x, double s) { return {s * x[0], s * x[1], s * x[2]}; }

inline Triple adjoint_triple(const Matrix& k, const Triple& x) {
  return {adjoint_unitary(k, x[0]), adjoint_unitary(k, x[1]), adjoint_unitary(k, x[2])};
}

inline Triple random_triple(int n, Rng& rng, double scale = 1.0) {
  return {random_compact(n, rng, scale), random_compact(n, rng, scale),
          random_compact(n, rng, scale)};
}

/// Random direction in k^3 with norm exactly `radius`.
inline Triple random_triple_on_sphere(int n, Rng& rng, double radius) {
  Triple x = random_triple(n, rng);
  return scaled(x, radius / triple_norm(x));
}

/// Random direction in k^3 with norm uniform in [0, radius].
inline Triple random_triple_in_ball(int n, Rng& rng, double radius) {
  std::uniform_real_distribution<double> u(0.0, radius);
  return random_triple_on_sphere(n, rng, u(rng));
}

/// Validates a triple of matrices as an element of k^3.
inline Triple checked_triple(const Triple& x, double tol = defaults::kAlgebraTol) {
  const int n = static_cast<int>(x[0].rows());
  for (const auto& m : x) {
    if (m.rows() != n || m.cols() != n) throw RankMismatch("triple components differ in rank");
    if (!is_compact(m, tol)) throw InvalidElement("triple component is not in su(n)");
  }
  return x;
}

inline Triple to_triple(const std::array<AlgebraElement, 3>& x) {
  for (const auto& e : x)
    if (e.form() != Form::compact) throw InvalidElement("reduced flow needs compact-form data");
  return checked_triple({x[0].matrix(), x[1].matrix(), x[2].matrix()});
}

/// Right-hand side of the reduced Nahm equation.
inline Triple reduced_rhs(const Triple& p) {
  return {-commutator(p[1], p[2]), -commutator(p[2], p[0]), -commutator(p[0], p[1])};
}

/// Linearization of the reduced equation at p applied to dp.
inline Triple reduced_variation_rhs(const Triple& p, const Triple& dp) {
  return {-commutator(dp[1], p[2]) - commutator(p[1], dp[2]),
          -commutator(dp[2], p[0]) - commutator(p[2], dp[0]),
          -commutator(dp[0], p[1]) - commutator(p[0], dp[1])};
}

struct FlowOptions {
  double step = defaults::kStep;
  double blowup_threshold = defaults::kBlowupThreshold;
  /// A step is rejected once step * |P| exceeds this; the trajectory is then
  /// no longer resolved by the grid and is reported as blown up.
  double resolution_limit = defaults::kResolutionLimit;
  double residual_tol = defaults::kResidualTol;
};

/// Number of uniform intervals used for a requested step: ceil(1/step)
/// rounded up to an even count so Simpson's rule applies on the grid.
inline int interval_count(double step) {
  if (!(step > 0.0) || step > defaults::kMaxStep + 1e-15)
    throw StepOutOfRange("step must lie in (0, 1/16]");
  int n = static_cast<int>(std::ceil(1.0 / step - 1e-9));
  if (n % 2 == 1) ++n;
  return n;
}

enum class FlowStatus { complete, blowup };

struct ReducedSolution {
  Triple initial;
  double step = 0.0;  // effective grid spacing 1/N
  std::vector<double> times;
  std::vector<Triple> values;
  FlowStatus status = FlowStatus::complete;
  double blowup_time = std::numeric_limits<double>::infinity();
  double sup_norm = 0.0;

  int rank() const { return static_cast<int>(initial[0].rows()); }
  bool complete() const { return status == FlowStatus::complete; }
  const Triple& final_value() const { return values.back(); }

  /// Cubic Hermite interpolation between grid nodes using the equation for
  /// the derivatives; fourth-order accurate.
  Triple at(double t) const {
    if (t <= times.front()) return values.front();
    if (t >= times.back()) return values.back();
    const auto j = static_cast<std::size_t>(std::min<double>(std::floor(t / step), values.size() - 2.0));
    const double s = (t - times[j]) / step;
    const double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
    const double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
    const Triple d0 = reduced_rhs(values[j]), d1 = reduced_rhs(values[j + 1]);
    Triple out;
    for (int a = 0; a < 3; ++a)
      out[a] = h00 * values[j][a] + h10 * step * d0[a] + h01 * values[j + 1][a] + h11 * step * d1[a];
    return out;
  }
};

namespace detail {

inline void project_triple(Triple& p) {
  for (auto& m : p) m = project_compact(m);
}

inline Triple axpy(const Triple& x, double a, const Triple& y) {
  return {x[0] + a * y[0], x[1] + a * y[1], x[2] + a * y[2]};
}

inline bool finite(const Triple& p) {
  for (const auto& m : p)
    if (!m.allFinite()) return false;
  return true;
}

}  // namespace detail

/// Classical RK4 for the reduced Nahm equation on [0, 1].
inline ReducedSolution integrate_reduced(const Triple& x, const FlowOptions& opt = {}) {
  checked_triple(x, 1e-10);
  const int steps = interval_count(opt.step);
  const double h = 1.0 / steps;
  ReducedSolution sol;
  sol.initial = x;
  sol.step = h;
  sol.times.reserve(static_cast<std::size_t>(steps) + 1);
  sol.values.reserve(static_cast<std::size_t>(steps) + 1);
  sol.times.push_back(0.0);
  sol.values.push_back(x);
  sol.sup_norm = triple_norm(x);
  Triple p = x;
  for (int j = 0; j < steps; ++j) {
    const Triple k1 = reduced_rhs(p);
    const Triple k2 = reduced_rhs(detail::axpy(p, 0.5 * h, k1));
    const Triple k3 = reduced_rhs(detail::axpy(p, 0.5 * h, k2));
    const Triple k4 = reduced_rhs(detail::axpy(p, h, k3));
    Triple next;
    for (int a = 0; a < 3; ++a) next[a] = p[a] + (h / 6.0) * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a]);
    detail::project_triple(next);
    const double nrm = triple_norm(next);
    if (!detail::finite(next) || !(nrm <= opt.blowup_threshold) || h * nrm > opt.resolution_limit) {
      sol.status = FlowStatus::blowup;
      sol.blowup_time = sol.times.back();
      return sol;
    }
    p = next;
    sol.times.push_back((j + 1) * h);
    sol.values.push_back(p);
    sol.sup_norm = std::max(sol.sup_norm, nrm);
  }
  return sol;
}

inline ReducedSolution integrate_reduced(const std::array<AlgebraElement, 3>& x,
                                         const FlowOptions& opt = {}) {
  return integrate_reduced(to_triple(x), opt);
}

/// Integrates the reduced equation together with its linearization along
/// the direction v. Returns the base solution and the variation on its grid.
inline std::pair<ReducedSolution, std::vector<Triple>> integrate_reduced_tangent(
    const Triple& x, const Triple& v, const FlowOptions& opt = {}) {
  const int steps = interval_count(opt.step);
  const double h = 1.0 / steps;
  ReducedSolution sol;
  sol.initial = x;
  sol.step = h;
  sol.times.push_back(0.0);
  sol.values.push_back(x);
  sol.sup_norm = triple_norm(x);
  std::vector<Triple> dv{v};
  Triple p = x, d = v;
  for (int j = 0; j < steps; ++j) {
    const Triple k1 = reduced_rhs(p);
    const Triple l1 = reduced_variation_rhs(p, d);
    const Triple p2 = detail::axpy(p, 0.5 * h, k1), d2 = detail::axpy(d, 0.5 * h, l1);
    const Triple k2 = reduced_rhs(p2);
    const Triple l2 = reduced_variation_rhs(p2, d2);
    const Triple p3 = detail::axpy(p, 0.5 * h, k2), d3 = detail::axpy(d, 0.5 * h, l2);
    const Triple k3 = reduced_rhs(p3);
    const Triple l3 = reduced_variation_rhs(p3, d3);
    const Triple p4 = detail::axpy(p, h, k3), d4 = detail::axpy(d, h, l3);
    const Triple k4 = reduced_rhs(p4);
    const Triple l4 = reduced_variation_rhs(p4, d4);
    for (int a = 0; a < 3; ++a) {
      p[a] += (h / 6.0) * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a]);
      d[a] += (h / 6.0) * (l1[a] + 2.0 * l2[a] + 2.0 * l3[a] + l4[a]);
    }
    detail::project_triple(p);
    detail::project_triple(d);
    const double nrm = triple_norm(p);
    if (!detail::finite(p) || !(nrm <= opt.blowup_threshold) || h * nrm > opt.resolution_limit) {
      sol.status = FlowStatus::blowup;
      sol.blowup_time = sol.times.back();
      return {sol, dv};
    }
    sol.times.push_back((j + 1) * h);
    sol.values.push_back(p);
    sol.sup_norm = std::max(sol.sup_norm, nrm);
    dv.push_back(d);
  }
  return {sol, dv};
}

/// max_t max_a |P_a' + [P_b, P_c]| with derivatives from finite differences
/// (centered inside, second-order one-sided at the ends).
inline double reduced_residual(const ReducedSolution& sol) {
  const auto& v = sol.values;
  const std::size_t m = v.size();
  if (m < 3) return 0.0;
  const double h = sol.step;
  double worst = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    for (int a = 0; a < 3; ++a) {
      Matrix d;
      if (j == 0)
        d = (-3.0 * v[0][a] + 4.0 * v[1][a] - v[2][a]) / (2.0 * h);
      else if (j == m - 1)
        d = (3.0 * v[m - 1][a] - 4.0 * v[m - 2][a] + v[m - 3][a]) / (2.0 * h);
      else
        d = (v[j + 1][a] - v[j - 1][a]) / (2.0 * h);
      const int b = (a + 1) % 3, c = (a + 2) % 3;
      worst = std::max(worst, frobenius(d + commutator(v[j][b], v[j][c])));
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Domain W.
// ---------------------------------------------------------------------------

enum class Membership { inside, outside, boundary_unresolved };

inline const char* to_string(Membership m) {
  switch (m) {
    case Membership::inside: return "inside";
    case Membership::outside: return "outside";
    default: return "boundary_unresolved";
  }
}

struct MembershipResult {
  Membership verdict = Membership::inside;
  double step = 0.0;         // finest step used
  double blowup_time = 1.0;  // finest observed blow-up time (inf if complete)
};

/// Three-valued membership test for W via step halving.
inline MembershipResult membership_W_detail(const Triple& x, double min_step = 1.0 / 16384.0) {
  const double nrm = triple_norm(x);
  double h = 1.0 / 64.0;
  while (h * nrm > 0.125 && h > min_step) h *= 0.5;
  FlowOptions opt;
  opt.step = h;
  ReducedSolution coarse = integrate_reduced(x, opt);
  for (;;) {
    opt.step = 0.5 * h;
    ReducedSolution fine = integrate_reduced(x, opt);
    const double hf = fine.step;
    if (coarse.complete() && fine.complete())
      return {Membership::inside, hf, std::numeric_limits<double>::infinity()};
    if (!fine.complete() && !coarse.complete()) {
      const double t1 = coarse.blowup_time, t2 = fine.blowup_time;
      if (1.0 - t2 <= 2.0 * hf) return {Membership::boundary_unresolved, hf, t2};
      if (std::abs(t1 - t2) <= std::max(4.0 * coarse.step, 0.25 * (1.0 - t2)))
        return {Membership::outside, hf, t2};
    }
    if (hf <= min_step) {
      const double t = fine.complete() ? std::numeric_limits<double>::infinity() : fine.blowup_time;
      return {Membership::boundary_unresolved, hf, t};
    }
    h = hf;
    coarse = std::move(fine);
  }
}

inline Membership membership_W(const Triple& x) { return membership_W_detail(x).verdict; }

inline Membership membership_W(const std::array<AlgebraElement, 3>& x) {
  return membership_W(to_triple(x));
}

// ---------------------------------------------------------------------------
// Full Nahm equations and gauge fixing.
// ---------------------------------------------------------------------------

struct NahmQuadruple {
  double step = 0.0;
  std::vector<double> times;
  std::vector<Quadruple> values;

  int rank() const { return static_cast<int>(values.front()[0].rows()); }

  /// Builds a quadruple from a sampler t -> (A0, A1, A2, A3) on N + 1 nodes.
  static NahmQuadruple sample(const std::function<Quadruple(double)>& f, double step) {
    const int steps = interval_count(step);
    NahmQuadruple q;
    q.step = 1.0 / steps;
    for (int j = 0; j <= steps; ++j) {
      const double t = j * q.step;
      q.times.push_back(t);
      q.values.push_back(f(t));
    }
    return q;
  }
};

/// Right-hand side A_a' = -[A0, A_a] - [A_b, A_c] for a = 1, 2, 3.
inline Triple full_rhs(const Matrix& a0, const Triple& a) {
  return {-commutator(a0, a[0]) - commutator(a[1], a[2]),
          -commutator(a0, a[1]) - commutator(a[2], a[0]),
          -commutator(a0, a[2]) - commutator(a[0], a[1])};
}

/// RK4 solution of the Nahm equations with a prescribed A0 profile.
inline NahmQuadruple integrate_full(const std::function<Matrix(double)>& a0_profile,
                                    const Triple& x, const FlowOptions& opt = {}) {
  checked_triple(x, 1e-10);
  const int steps = interval_count(opt.step);
  const double h = 1.0 / steps;
  NahmQuadruple q;
  q.step = h;
  Triple a = x;
  q.times.push_back(0.0);
  q.values.push_back({project_compact(a0_profile(0.0)), a[0], a[1], a[2]});
  for (int j = 0; j < steps; ++j) {
    const double t = j * h;
    const Matrix b0 = project_compact(a0_profile(t));
    const Matrix bm = project_compact(a0_profile(t + 0.5 * h));
    const Matrix b1 = project_compact(a0_profile(t + h));
    const Triple k1 = full_rhs(b0, a);
    const Triple k2 = full_rhs(bm, detail::axpy(a, 0.5 * h, k1));
    const Triple k3 = full_rhs(bm, detail::axpy(a, 0.5 * h, k2));
    const Triple k4 = full_rhs(b1, detail::axpy(a, h, k3));
    for (int c = 0; c < 3; ++c) a[c] += (h / 6.0) * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
    detail::project_triple(a);
    const double nrm = triple_norm(a);
    if (!detail::finite(a) || !(nrm <= opt.blowup_threshold) || h * nrm > opt.resolution_limit)
      throw OutsideDomain("Nahm flow blew up before t = 1", t);
    q.times.push_back(t + h);
    q.values.push_back({b1, a[0], a[1], a[2]});
  }
  return q;
}

/// max_t max_a |A_a' + [A0, A_a] + [A_b, A_c]|, finite-difference derivatives.
inline double nahm_residual(const NahmQuadruple& q) {
  const auto& v = q.values;
  const std::size_t m = v.size();
  if (m < 3) return 0.0;
  const double h = q.step;
  double worst = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    for (int a = 1; a <= 3; ++a) {
      Matrix d;
      if (j == 0)
        d = (-3.0 * v[0][a] + 4.0 * v[1][a] - v[2][a]) / (2.0 * h);
      else if (j == m - 1)
        d = (3.0 * v[m - 1][a] - 4.0 * v[m - 2][a] + v[m - 3][a]) / (2.0 * h);
      else
        d = (v[j + 1][a] - v[j - 1][a]) / (2.0 * h);
      const int b = a % 3 + 1, c = (a + 1) % 3 + 1;
      worst = std::max(worst, frobenius(d + commutator(v[j][0], v[j][a]) + commutator(v[j][b], v[j][c])));
    }
  }
  return worst;
}

/// Gauge action k . A = (k A0 k^-1 - k' k^-1, k A_a k^-1) with k given with
/// its derivative.
inline NahmQuadruple apply_gauge(const NahmQuadruple& a,
                                 const std::function<Matrix(double)>& k,
                                 const std::function<Matrix(double)>& k_dot) {
  NahmQuadruple out;
  out.step = a.step;
  out.times = a.times;
  for (std::size_t j = 0; j < a.values.size(); ++j) {
    const double t = a.times[j];
    const Matrix kt = k(t), kinv = kt.inverse();
    Quadruple v;
    v[0] = kt * a.values[j][0] * kinv - k_dot(t) * kinv;
    for (int c = 1; c <= 3; ++c) v[c] = kt * a.values[j][c] * kinv;
    out.values.push_back(v);
  }
  return out;
}

struct GaugeTransform {
  double step = 0.0;
  std::vector<Matrix> k;  // k(t_j), k(0) = identity
  const Matrix& final_value() const { return k.back(); }
};

namespace detail {

/// Cubic Lagrange interpolation of the A0 samples at t = (j + s) h, s in [0, 1].
inline Matrix interpolate_a0(const NahmQuadruple& q, std::size_t j, double s) {
  const std::size_t m = q.values.size();
  std::size_t base = j == 0 ? 0 : j - 1;
  if (base + 3 >= m) base = m - 4;
  const double x = static_cast<double>(j - base) + s;  // position relative to base node
  Matrix out = zeros(q.rank());
  for (int i = 0; i < 4; ++i) {
    double w = 1.0;
    for (int l = 0; l < 4; ++l)
      if (l != i) w *= (x - l) / static_cast<double>(i - l);
    out += w * q.values[base + static_cast<std::size_t>(i)][0];
  }
  return out;
}

}  // namespace detail

/// Moves a solution of the Nahm equations to temporal gauge: solves k' = k A0,
/// k(0) = 1 with a fourth-order Magnus step and returns (k, Ad_k A).
inline std::pair<GaugeTransform, ReducedSolution> gauge_fix(
    const NahmQuadruple& a, double residual_tol = defaults::kResidualTol) {
  if (a.values.size() < 4) throw InvalidProblem("gauge_fix needs at least four samples");
  const double res = nahm_residual(a);
  if (!(res < residual_tol)) throw ResidualViolation("input violates the Nahm equations", res);
  const int n = a.rank();
  const double h = a.step;
  const double c1 = 0.5 - std::sqrt(3.0) / 6.0, c2 = 0.5 + std::sqrt(3.0) / 6.0;
  GaugeTransform gt;
  gt.step = h;
  gt.k.push_back(identity(n));
  for (std::size_t j = 0; j + 1 < a.values.size(); ++j) {
    const Matrix a1 = detail::interpolate_a0(a, j, c1);
    const Matrix a2 = detail::interpolate_a0(a, j, c2);
    const Matrix omega = 0.5 * h * (a1 + a2) + (std::sqrt(3.0) / 12.0) * h * h * commutator(a1, a2);
    gt.k.push_back(gt.k.back() * UnitaryPath(project_compact(omega))(1.0));
  }
  ReducedSolution sol;
  sol.step = h;
  sol.times = a.times;
  for (std::size_t j = 0; j < a.values.size(); ++j) {
    const Matrix& k = gt.k[j];
    Triple p{project_compact(adjoint_unitary(k, a.values[j][1])),
             project_compact(adjoint_unitary(k, a.values[j][2])),
             project_compact(adjoint_unitary(k, a.values[j][3]))};
    sol.sup_norm = std::max(sol.sup_norm, triple_norm(p));
    sol.values.push_back(p);
  }
  sol.initial = sol.values.front();
  const double red = reduced_residual(sol);
  if (!(red < residual_tol)) throw ResidualViolation("gauge-fixed data violates the reduced equation", red);
  return {gt, sol};
}

}  // namespace nahmkn
