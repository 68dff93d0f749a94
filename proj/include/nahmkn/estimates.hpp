#pragma once

// Sampling checks of the growth estimate for psi and of the properness and
// domination statements built on it, for SU(n) with the standard norm
// |X|^2 = sum |X_ij|^2 on gl(n, C).

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "nahmkn/moduli_map.hpp"
#include "nahmkn/polynomial.hpp"
#include "nahmkn/quadrature.hpp"
#include "nahmkn/rng.hpp"

namespace nahmkn::estimates {

struct Constants {
  int n = 2;
  double c1 = 1.0;  // |X| <= c1 |X|_inner on k; the two agree here
  double r = std::sqrt(2.0) * std::numbers::pi;  // SU(2): |log k|^2 = 2 theta^2, theta in [0, pi]
  double core_radius = 0.1;

  double b() const { return 2.0 * std::exp(2.0 * r * n * n); }
  double c() const { return 2.0 * std::sqrt(2.0) * n * n * c1; }

  static Constants for_rank(int n) {
    Constants k;
    k.n = n;
    // traceless principal log: every angle has modulus <= pi + 2 pi / n
    if (n != 2) k.r = std::sqrt(static_cast<double>(n)) * (std::numbers::pi + 2.0 * std::numbers::pi / n);
    return k;
  }
};

struct SampleRecord {
  std::string descriptor;
  double left = 0.0;
  double right = 0.0;
  bool pass = true;
  bool in_core = false;
  std::vector<std::pair<std::string, double>> extra;
};

struct EstimateReport {
  std::string kind;
  Constants constants;
  std::uint64_t seed = 0;
  std::vector<SampleRecord> samples;
  std::vector<std::pair<std::string, double>> summary;
  int failures = 0;
  double max_ratio = 0.0;
  bool verdict = true;

  void add_summary(const std::string& key, double v) { summary.emplace_back(key, v); }
  double summary_value(const std::string& key) const {
    for (const auto& [k, v] : summary)
      if (k == key) return v;
    return std::numeric_limits<double>::quiet_NaN();
  }
};

/// |psi(k, X)|^2 = |g|^2 + |Y|^2 in the standard norm of gl(n, C)^2.
inline double psi_norm_squared(const CotangentPoint& q) { return q.g.squaredNorm() + q.y.squaredNorm(); }

struct TrajectoryChecks {
  double rho = 0.0;
  double gronwall_worst = 0.0;       // max_t u(t) / bound(t) with the constant r
  double gronwall_worst_log = 0.0;   // same with |Y0| in place of r
  double holder_left = 0.0;          // int_0^1 |P1|
  double holder_right = 0.0;         // sqrt2 c1 sqrt(rho)
  double y0_norm = 0.0;
};

/// Per-trajectory inequalities: u(t) = |g(t)|^2 <= |g(0)|^2 exp(2 n^2 int_0^t (r + |P1|))
/// and Hoelder's step int_0^1 |P1| <= sqrt2 c1 sqrt(rho(X)).
inline TrajectoryChecks check_trajectory(const PsiTrajectory& tr, const Constants& k) {
  TrajectoryChecks out;
  const auto& sol = tr.flow;
  std::vector<double> p1(sol.values.size());
  for (std::size_t j = 0; j < p1.size(); ++j) p1[j] = sol.values[j][0].norm();
  const auto cum = cumulative_simpson(p1, sol.step);
  out.rho = potential_rho(sol);
  out.y0_norm = tr.y0.norm();
  const double n2 = static_cast<double>(k.n * k.n);
  const double u0 = tr.g_path.front().squaredNorm();
  for (std::size_t m = 0; m < tr.g_path.size(); ++m) {
    const std::size_t j = 2 * m;
    const double t = sol.times[j];
    const double u = tr.g_path[m].squaredNorm();
    const double bound = u0 * std::exp(2.0 * n2 * (k.r * t + cum[j]));
    const double bound_y = u0 * std::exp(2.0 * n2 * (out.y0_norm * t + cum[j]));
    out.gronwall_worst = std::max(out.gronwall_worst, u / bound);
    out.gronwall_worst_log = std::max(out.gronwall_worst_log, u / bound_y);
  }
  out.holder_left = simpson(p1, sol.step);
  out.holder_right = std::sqrt(2.0) * k.c1 * std::sqrt(out.rho);
  return out;
}

inline std::string describe(const ModuliPoint& p) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "n=%d |X|=%.6g", p.rank(), triple_norm(p.x));
  return buf;
}

/// Growth bound |psi(k, X)|^2 < b e^{c sqrt(rho(X))} on each sample; samples
/// with |X| <= core_radius are recorded but not flagged. Each record also
/// carries the Groenwall and Hoelder checks of its trajectory.
inline EstimateReport growth_bound_scan(const std::vector<ModuliPoint>& points, const Constants& k = {},
                                        const MapOptions& opt = {}) {
  EstimateReport rep;
  rep.kind = "growth";
  rep.constants = k;
  double worst_gronwall = 0.0, worst_gronwall_y = 0.0, worst_holder = -INFINITY;
  int outside_core = 0;
  for (const auto& p : points) {
    const auto tr = psi_trajectory(p, opt);
    const auto chk = check_trajectory(tr, k);
    SampleRecord s;
    s.descriptor = describe(p);
    s.left = psi_norm_squared(tr.value);
    s.right = k.b() * std::exp(k.c() * std::sqrt(chk.rho));
    s.in_core = triple_norm(p.x) <= k.core_radius;
    const bool traj_ok = chk.gronwall_worst <= 1.0 + 1e-6 && chk.gronwall_worst_log <= 1.0 + 1e-6 &&
                         chk.holder_left <= chk.holder_right + 1e-9;
    s.pass = s.left <= s.right && traj_ok;
    s.extra = {{"rho", chk.rho},
               {"gronwall_ratio", chk.gronwall_worst},
               {"gronwall_ratio_logk", chk.gronwall_worst_log},
               {"holder_left", chk.holder_left},
               {"holder_right", chk.holder_right}};
    worst_gronwall = std::max(worst_gronwall, chk.gronwall_worst);
    worst_gronwall_y = std::max(worst_gronwall_y, chk.gronwall_worst_log);
    worst_holder = std::max(worst_holder, chk.holder_left - chk.holder_right);
    if (!s.in_core) {
      ++outside_core;
      rep.max_ratio = std::max(rep.max_ratio, s.left / s.right);
      if (!s.pass) ++rep.failures;
    } else if (!traj_ok) {
      ++rep.failures;
    }
    rep.samples.push_back(std::move(s));
  }
  rep.verdict = rep.failures == 0;
  rep.add_summary("b", k.b());
  rep.add_summary("c", k.c());
  rep.add_summary("r", k.r);
  rep.add_summary("n", k.n);
  rep.add_summary("c1", k.c1);
  rep.add_summary("core_radius", k.core_radius);
  rep.add_summary("samples_outside_core", outside_core);
  rep.add_summary("max_gronwall_ratio", worst_gronwall);
  rep.add_summary("max_gronwall_ratio_logk", worst_gronwall_y);
  rep.add_summary("max_holder_excess", worst_holder);
  return rep;
}

// ---- sampling ----------------------------------------------------------

/// Rotation of the triple index by the SO(3) matrix of Ad_u on su(2).
inline Triple rotate_index(const Triple& x, const Matrix& u) {
  const auto basis = su2_basis();
  Triple out = zero_triple(static_cast<int>(x[0].rows()));
  for (int a = 0; a < 3; ++a) {
    const Matrix ra = adjoint_unitary(u, basis[static_cast<std::size_t>(a)]);
    for (int b = 0; b < 3; ++b) out[static_cast<std::size_t>(b)] += 2.0 * inner(ra, basis[static_cast<std::size_t>(b)]) * x[static_cast<std::size_t>(a)];
  }
  return out;
}

/// s Ad_k1 R(u) (T1, T2, T3) plus a perturbation of norm `noise`: a point
/// near the ray through the su(2) triple, which lies in W for all s >= 0.
/// W is thin around that ray far out, so the perturbation is absolute.
inline Triple ray_sample(Rng& rng, double s, double noise) {
  const Matrix k1 = random_special_unitary(2, rng);
  const Matrix u = random_special_unitary(2, rng);
  Triple x = scaled(adjoint_triple(k1, rotate_index(su2_triple(), u)), s);
  if (noise > 0.0) {
    const Triple d = random_triple_on_sphere(2, rng, noise);
    for (int a = 0; a < 3; ++a) x[static_cast<std::size_t>(a)] += d[static_cast<std::size_t>(a)];
  }
  return x;
}

/// Draws a point of SU(2) x W by `draw` until membership is confirmed.
template <class Draw>
std::optional<ModuliPoint> draw_point(Rng& rng, Draw draw, int max_tries = 200) {
  for (int t = 0; t < max_tries; ++t) {
    const Triple x = draw(rng);
    const Matrix k = random_special_unitary(static_cast<int>(x[0].rows()), rng);
    if (membership_W_detail(x).verdict == Membership::inside) return ModuliPoint{k, x};
  }
  return std::nullopt;
}

/// Sample set for the growth scan: half uniform in the ball of radius
/// `ball` (rejecting points outside W), half along perturbed su(2) rays with
/// s uniform in [0, s_max]. Sample i depends only on (seed, i).
inline std::vector<ModuliPoint> growth_samples(std::uint64_t seed, int count, double ball = 1.5,
                                               double s_max = 30.0) {
  std::vector<ModuliPoint> out;
  for (int i = 0; i < count; ++i) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(i));
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::optional<ModuliPoint> p;
    if (i % 2 == 0) {
      p = draw_point(rng, [&](Rng& g) { return random_triple_in_ball(2, g, ball); });
    } else {
      const double s = s_max * uni(rng);
      p = draw_point(rng, [&](Rng& g) { return ray_sample(g, s, 0.03); });
    }
    if (p) out.push_back(std::move(*p));
  }
  return out;
}

// ---- properness ----------------------------------------------------------

/// rho on spheres |X| = R intersected with W, with one common direction set
/// for all radii: the su(2) triple itself, then alternately perturbed su(2)
/// rays and uniform directions. Directions that
/// leave W at a radius are dropped there and counted as rejections.
inline EstimateReport properness_scan(const std::vector<double>& radii, std::uint64_t seed,
                                      int directions = 64) {
  EstimateReport rep;
  rep.kind = "properness";
  std::vector<Triple> dirs;
  for (int i = 0; i < directions; ++i) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(i));
    Triple d = i == 0 ? su2_triple() : i % 2 == 0 ? ray_sample(rng, 1.0, 0.2) : random_triple_on_sphere(2, rng, 1.0);
    dirs.push_back(scaled(d, 1.0 / triple_norm(d)));
  }
  double beta = 0.0, prev_min = -INFINITY;
  bool monotone = true;
  for (double radius : radii) {
    double min_rho = INFINITY;
    int inside = 0;
    for (const auto& d : dirs) {
      const Triple x = scaled(d, radius);
      if (radius > 0.0 && membership_W_detail(x).verdict != Membership::inside) continue;
      const double rho = radius == 0.0 ? 0.0 : potential_rho(x);
      ++inside;
      min_rho = std::min(min_rho, rho);
      if (radius >= 1.0) beta = std::max(beta, radius / rho);
    }
    // the closed-form point at this radius, when the radius matches |(T1,T2,T3)| s
    const double s = radius / std::sqrt(1.5);
    const double closed = s * s / (2.0 * (1.0 + s));  // rho along the first direction
    SampleRecord r;
    char buf[64];
    std::snprintf(buf, sizeof buf, "radius=%.6g", radius);
    r.descriptor = buf;
    r.left = prev_min;
    r.right = min_rho;
    r.pass = inside > 0 && min_rho >= prev_min;
    r.extra = {{"radius", radius},
               {"inside", inside},
               {"rejected", static_cast<double>(dirs.size()) - inside},
               {"min_rho", min_rho},
               {"rho_su2_ray", closed}};
    if (inside > 0) {
      if (min_rho < prev_min) monotone = false;
      prev_min = min_rho;
    } else {
      ++rep.failures;  // reported, not fatal
    }
    rep.samples.push_back(std::move(r));
  }
  rep.verdict = monotone;
  rep.add_summary("beta", beta);
  rep.add_summary("directions", directions);
  rep.add_summary("radii_without_samples", rep.failures);
  return rep;
}

// ---- domination ----------------------------------------------------------

struct DominationOptions {
  std::vector<double> window_edges{0.0, 4.0, 8.0, 12.0, 16.0, 20.0, 24.0};
  int samples = 400;
  int min_per_window = 5;
  double s_max = 52.0;
  double noise = 0.03;
};

struct WindowStat {
  double lo, hi;
  int count = 0;
  double max_ratio = 0.0;  // max |u| e^{-f}
};

struct PolynomialDomination {
  std::string name;
  int degree = 0;
  std::vector<WindowStat> windows;
  bool decreasing = false;  // strictly, across the top three populated windows
};

/// Points of SU(2) x W along perturbed su(2) rays, with f = rho(X) and psi(k, X).
struct DominationSample {
  double f;
  CotangentPoint q;
};

inline std::vector<DominationSample> domination_samples(std::uint64_t seed, const DominationOptions& opt) {
  std::vector<DominationSample> out;
  for (int i = 0; i < opt.samples; ++i) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(i));
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const double s = opt.s_max * uni(rng);
    const auto p = draw_point(rng, [&](Rng& g) { return ray_sample(g, s, opt.noise); });
    if (!p) continue;
    const auto tr = psi_trajectory(*p);
    out.push_back({potential_rho(tr.flow), tr.value});
  }
  return out;
}

inline PolynomialDomination dominate(const Polynomial& u, const std::vector<DominationSample>& samples,
                                     const DominationOptions& opt) {
  PolynomialDomination d;
  d.name = u.name;
  d.degree = u.degree;
  for (std::size_t w = 0; w + 1 < opt.window_edges.size(); ++w)
    d.windows.push_back({opt.window_edges[w], opt.window_edges[w + 1], 0, 0.0});
  for (const auto& s : samples)
    for (auto& w : d.windows)
      if (s.f >= w.lo && s.f < w.hi) {
        ++w.count;
        w.max_ratio = std::max(w.max_ratio, std::abs(u(s.q)) * std::exp(-s.f));
      }
  std::vector<const WindowStat*> top;
  for (auto it = d.windows.rbegin(); it != d.windows.rend() && top.size() < 3; ++it)
    if (it->count >= opt.min_per_window) top.push_back(&*it);
  d.decreasing = top.size() == 3 && top[2]->max_ratio > top[1]->max_ratio && top[1]->max_ratio > top[0]->max_ratio;
  return d;
}

inline std::pair<EstimateReport, std::vector<PolynomialDomination>> domination_scan(
    const std::vector<Polynomial>& polys, std::uint64_t seed, const DominationOptions& opt = {}) {
  for (const auto& u : polys)
    if (u.degree > 6) throw InvalidProblem("polynomial degree must be <= 6");
  const auto samples = domination_samples(seed, opt);
  EstimateReport rep;
  rep.kind = "domination";
  rep.seed = seed;
  std::vector<PolynomialDomination> all;
  for (const auto& u : polys) {
    auto d = dominate(u, samples, opt);
    int populated = 0;
    for (const auto& w : d.windows) populated += w.count >= opt.min_per_window;
    if (populated < 3) throw InvalidProblem("insufficient samples in the top windows");
    SampleRecord r;
    r.descriptor = u.name;
    // left: ratio in the highest populated window; right: the window below it
    std::vector<double> ratios;
    for (auto it = d.windows.rbegin(); it != d.windows.rend() && ratios.size() < 3; ++it)
      if (it->count >= opt.min_per_window) ratios.push_back(it->max_ratio);
    r.left = ratios[0];
    r.right = ratios[1];
    r.pass = d.decreasing;
    for (const auto& w : d.windows) r.extra.emplace_back("window_" + std::to_string(static_cast<int>(w.lo)), w.max_ratio);
    if (!r.pass) ++rep.failures;
    rep.max_ratio = std::max(rep.max_ratio, r.left);
    rep.samples.push_back(std::move(r));
    all.push_back(std::move(d));
  }
  rep.verdict = rep.failures == 0;
  rep.add_summary("samples", static_cast<double>(samples.size()));
  return {rep, all};
}

}  // namespace nahmkn::estimates
