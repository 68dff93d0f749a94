#pragma once

// S^1 acting on C* with an invariant potential f(z) = r(|z|^2) whose moment
// map has bounded image: for r(t) = sqrt(1 + log^2 t) the shifted symplectic
// quotient at level n is empty once |n| >= 2, while the twisted GIT quotient
// of C* is a point for every n.

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nahmkn/errors.hpp"

namespace nahmkn::counterexample {

/// f(z) = r(|z|^2) with r and its first two derivatives in closed form.
struct RadialPotential {
  std::function<double(double)> r, dr, ddr;

  static RadialPotential log_profile() {
    return {
        [](double t) { return std::hypot(1.0, std::log(t)); },
        [](double t) {
          const double l = std::log(t);
          return l / (t * std::hypot(1.0, l));
        },
        [](double t) {
          const double l = std::log(t), rr = std::hypot(1.0, l);
          return (1.0 - l) / (t * t * rr) - l * l / (t * t * rr * rr * rr);
        },
    };
  }

  double f(double abs_z) const { return r(abs_z * abs_z); }
};

inline void check_positive(double t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("t must be positive and finite");
}

/// 4 (t r'' + r'): the density of omega = 2i ddbar f in dx ^ dy.
inline double omega_coefficient(const RadialPotential& pot, double t) {
  check_positive(t);
  return 4.0 * (t * pot.ddr(t) + pot.dr(t));
}

/// For the log profile t r'' + r' = 1 / (t (1 + log^2 t)^{3/2}); this form
/// does not cancel and is used on the grid.
inline double omega_coefficient(double t) {
  check_positive(t);
  const double l = std::log(t);
  return 4.0 / (t * std::pow(1.0 + l * l, 1.5));
}

/// mu(z)(i) = -2 t r'(t), t = |z|^2.
inline double moment_value(const RadialPotential& pot, double t) {
  check_positive(t);
  return -2.0 * t * pot.dr(t);
}

/// Log profile: 2 t r'(t) = 2 log t / sqrt(1 + log^2 t).
inline double moment_value(double t) {
  check_positive(t);
  const double l = std::log(t);
  return -2.0 * l / std::hypot(1.0, l);
}

/// Log-spaced grid of t = |z|^2 values over [lo, hi].
inline std::vector<double> log_grid(double lo, double hi, int points) {
  if (!(lo > 0.0) || !(hi > lo) || points < 2) throw DomainError("invalid grid");
  std::vector<double> g(static_cast<std::size_t>(points));
  const double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < points; ++i) g[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / (points - 1));
  return g;
}

/// Default grid; wide enough that 2 t r' gets within 1e-3 of 2.
inline std::vector<double> default_grid() { return log_grid(1e-16, 1e16, 10000); }

struct Emptiness {
  bool empty = true;
  std::optional<double> witness_t;  // a solution of 2 t r'(t) = n when nonempty
  double witness_log_t = std::nan("");
};

/// Level set {t : 2 t r'(t) = n} = mu^{-1}(xi)/K with xi = -n: scanned on the
/// grid for sign changes, then bisected in log t to 1e-12.
inline Emptiness emptiness_certificate(int n, const std::vector<double>& grid = default_grid()) {
  if (n == 0) throw DomainError("n must be nonzero");
  const auto g = [n](double l) { return 2.0 * l / std::hypot(1.0, l) - n; };
  Emptiness out;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    double a = std::log(grid[i]), b = std::log(grid[i + 1]);
    double ga = g(a), gb = g(b);
    if (ga == 0.0) b = a, gb = 0.0;
    if (ga * gb > 0.0) continue;
    while (b - a > 1e-12) {
      const double m = 0.5 * (a + b), gm = g(m);
      if ((gm < 0.0) == (ga < 0.0)) a = m, ga = gm;
      else b = m;
    }
    out.empty = false;
    out.witness_log_t = 0.5 * (a + b);
    out.witness_t = std::exp(out.witness_log_t);
    return out;
  }
  return out;
}

struct Domination {
  bool fails = false;
  double witness_radius = std::nan("");  // |z| where the ratio is largest in the tails
  double witness_ratio = std::nan("");
  bool witness_increasing = false;  // ratio still increasing toward the end
  double ratio_small_end = 0.0, ratio_large_end = 0.0;
};

/// Tests |z|^m / e^{f(z)} -> 0 at both ends of C* on log-spaced radii
/// |z| in [e^{-ell}, e^{ell}]. holds-on-sample iff both end ratios are below
/// 1e-6 and the ratio decreases monotonically over the outer tenth of each
/// end.
inline Domination domination_failure(int m, double ell = 40.0, int points = 4001,
                                     const RadialPotential& pot = RadialPotential::log_profile()) {
  if (m < 0) throw DomainError("exponent must be nonnegative");
  std::vector<double> lr(static_cast<std::size_t>(points)), lratio(lr.size());
  for (int i = 0; i < points; ++i) {
    const double l = -ell + 2.0 * ell * i / (points - 1);  // log |z|
    lr[static_cast<std::size_t>(i)] = l;
    lratio[static_cast<std::size_t>(i)] = m * l - pot.r(std::exp(2.0 * l));
  }
  Domination d;
  d.ratio_small_end = std::exp(lratio.front());
  d.ratio_large_end = std::exp(lratio.back());
  const int tail = points / 10;
  bool monotone = true;
  std::size_t worst = 0;
  double worst_val = -INFINITY;
  const auto consider = [&](std::size_t i) {
    if (lratio[i] > worst_val) worst_val = lratio[i], worst = i;
  };
  for (int k = 0; k < tail; ++k) {
    const auto hi = static_cast<std::size_t>(points - 1 - k), lo = static_cast<std::size_t>(k);
    consider(hi);
    consider(lo);
    if (!(lratio[hi] < lratio[hi - 1])) monotone = false;  // must decrease toward +infinity
    if (!(lratio[lo] < lratio[lo + 1])) monotone = false;  // and toward 0
  }
  d.fails = !(monotone && d.ratio_small_end < 1e-6 && d.ratio_large_end < 1e-6);
  d.witness_radius = std::exp(lr[worst]);
  d.witness_ratio = std::exp(worst_val);
  const bool at_large = worst + 1 == lr.size() || worst > lr.size() / 2;
  d.witness_increasing = at_large ? lratio[worst] > lratio[worst - 1] : lratio[worst] > lratio[worst + 1];
  return d;
}

struct TableRow {
  double t, omega, mu;
  std::vector<double> ratios;  // |z|^m / e^f for m = 0..3, |z| = sqrt t
};

inline std::vector<TableRow> table(const std::vector<double>& grid) {
  const auto pot = RadialPotential::log_profile();
  std::vector<TableRow> rows;
  rows.reserve(grid.size());
  for (double t : grid) {
    TableRow row{t, omega_coefficient(t), moment_value(t), {}};
    for (int m = 0; m <= 3; ++m) row.ratios.push_back(std::exp(0.5 * m * std::log(t) - pot.r(t)));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace nahmkn::counterexample
