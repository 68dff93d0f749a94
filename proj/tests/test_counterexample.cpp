#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "nahmkn/counterexample.hpp"
#include "nahmkn/kempf_ness.hpp"

using namespace nahmkn;
namespace cx = nahmkn::counterexample;

namespace {

// Finite differences of r alone. With u = log t, t r'' + r' = (1/t) d^2 r / du^2,
// taken here by a five-point stencil in u.
double fd_omega(const cx::RadialPotential& pot, double t) {
  const double h = 1e-2, u = std::log(t);
  const auto r = [&](double v) { return pot.r(std::exp(v)); };
  const double d2 = (-r(u - 2 * h) + 16 * r(u - h) - 30 * r(u) + 16 * r(u + h) - r(u + 2 * h)) / (12 * h * h);
  return 4.0 * d2 / t;
}

}  // namespace

TEST(Omega, Examples) {
  EXPECT_NEAR(cx::omega_coefficient(1.0), 4.0, 1e-15);
  const double e = std::numbers::e;
  EXPECT_NEAR(cx::omega_coefficient(e), 4.0 / (e * std::pow(2.0, 1.5)), 1e-15);
  EXPECT_THROW(cx::omega_coefficient(0.0), DomainError);
  EXPECT_THROW(cx::omega_coefficient(-1.0), DomainError);
}

TEST(Omega, ClosedFormsAgree) {
  const auto pot = cx::RadialPotential::log_profile();
  for (double t : cx::log_grid(1e-6, 1e6, 200)) {
    const double closed = cx::omega_coefficient(t);
    EXPECT_NEAR(cx::omega_coefficient(pot, t), closed, 1e-9 * closed);
    EXPECT_NEAR(fd_omega(pot, t) / closed, 1.0, 1e-6);
  }
}

TEST(Omega, PositiveOnGrid) {
  for (double t : cx::default_grid()) EXPECT_GT(cx::omega_coefficient(t), 0.0) << t;
}

TEST(Moment, Examples) {
  EXPECT_EQ(cx::moment_value(1.0), 0.0);
  EXPECT_NEAR(cx::moment_value(std::numbers::e), -2.0 / std::sqrt(2.0), 1e-15);
  EXPECT_THROW(cx::moment_value(0.0), DomainError);
}

TEST(Moment, BoundedWithSupremumTwo) {
  const auto pot = cx::RadialPotential::log_profile();
  double sup = 0.0;
  for (double t : cx::default_grid()) {
    const double mu = cx::moment_value(t);
    EXPECT_LT(std::abs(mu), 2.0);
    EXPECT_NEAR(cx::moment_value(pot, t), mu, 1e-12);
    sup = std::max(sup, std::abs(mu));
  }
  EXPECT_GE(sup, 1.999);
  // monotone: 2 t r' increases with t
  double prev = INFINITY;
  for (double t : cx::log_grid(1e-8, 1e8, 1000)) {
    EXPECT_LT(cx::moment_value(t), prev);
    prev = cx::moment_value(t);
  }
}

TEST(Moment, MatchesGenericFiniteDifferenceMoment) {
  // S^1 on C with generator i, potential f(z) = r(|z|^2)
  const auto pot = cx::RadialPotential::log_profile();
  const auto f = [&](const CVector& z) { return pot.r(z.squaredNorm()); };
  CMatrix gen(1, 1);
  gen(0, 0) = {0.0, 1.0};
  double worst = 0.0;
  for (double t : cx::log_grid(1e-4, 1e4, 100)) {
    CVector z(1);
    z(0) = std::polar(std::sqrt(t), 0.7);
    const double fd = moment_from_potential(f, gen, z);
    worst = std::max(worst, std::abs(fd - cx::moment_value(t)));
  }
  RecordProperty("worst", std::to_string(worst));
  EXPECT_LT(worst, 1e-5);
}

TEST(Emptiness, Examples) {
  const auto e3 = cx::emptiness_certificate(3);
  EXPECT_TRUE(e3.empty);
  EXPECT_TRUE(cx::emptiness_certificate(2).empty);
  EXPECT_TRUE(cx::emptiness_certificate(-2).empty);
  const auto e1 = cx::emptiness_certificate(1);
  ASSERT_FALSE(e1.empty);
  EXPECT_NEAR(e1.witness_log_t, 1.0 / std::sqrt(3.0), 1e-11);
  const auto em = cx::emptiness_certificate(-1);
  ASSERT_FALSE(em.empty);
  EXPECT_NEAR(em.witness_log_t, -1.0 / std::sqrt(3.0), 1e-11);
  EXPECT_THROW(cx::emptiness_certificate(0), DomainError);
}

TEST(Emptiness, GitQuotientIsAPointForEveryLevel) {
  // On C* every orbit of C* is closed and every point is chi^n-semistable
  // (z^{n} or z^{-n} is a nonvanishing semi-invariant), so the twisted GIT
  // quotient is one point. The flat classifier agrees on C \ {0}.
  auto prob = LinearGitProblem::torus({{1}}, {3});
  CVector z(1);
  z(0) = {0.4, -0.2};
  EXPECT_EQ(kn_minimize(prob, z).verdict, Verdict::semistable);
}

TEST(Domination, Examples) {
  const auto d3 = cx::domination_failure(3);
  EXPECT_TRUE(d3.fails);
  EXPECT_GT(d3.witness_ratio, 1.0);
  EXPECT_TRUE(d3.witness_increasing);
  const auto pot = cx::RadialPotential::log_profile();
  const double e2 = std::exp(2.0);
  double prev = 0.0;
  for (double rad = e2; rad < 1e12; rad *= 1.5) {
    const double ratio = std::pow(rad, 3) / std::exp(pot.f(rad));
    EXPECT_GT(ratio, 1.0);
    EXPECT_GT(ratio, prev);
    prev = ratio;
  }
  // ratio -> 1 from below for m = 2
  const auto d2 = cx::domination_failure(2);
  EXPECT_TRUE(d2.fails);
  EXPECT_LT(d2.ratio_large_end, 1.0);
  EXPECT_GT(d2.ratio_large_end, 0.9);
  EXPECT_FALSE(cx::domination_failure(1).fails);
  EXPECT_FALSE(cx::domination_failure(0).fails);
  EXPECT_THROW(cx::domination_failure(-1), DomainError);
}

TEST(Properness, GrowsAtBothEnds) {
  const auto pot = cx::RadialPotential::log_profile();
  double prev = 0.0;
  for (double ell : {2.0, 4.0, 8.0, 16.0, 32.0}) {
    const double m = std::min(pot.f(std::exp(-ell)), pot.f(std::exp(ell)));
    EXPECT_GT(m, prev);
    prev = m;
  }
  EXPECT_GT(std::min(pot.f(1e-6), pot.f(1e6)), 27.0);
}

TEST(Table, Rows) {
  const auto rows = cx::table(cx::log_grid(0.5, 2.0, 3));
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_NEAR(rows[1].t, 1.0, 1e-15);
  EXPECT_NEAR(rows[1].omega, 4.0, 1e-14);
  EXPECT_EQ(rows[1].ratios.size(), 4u);
  EXPECT_NEAR(rows[1].ratios[0], std::exp(-1.0), 1e-15);
}
