#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "nahmkn/estimates.hpp"

using namespace nahmkn;
namespace est = nahmkn::estimates;

namespace {

constexpr double kPi = std::numbers::pi;

ModuliPoint on_ray(double s, const Matrix& k) { return ModuliPoint::make(k, scaled(su2_triple(), s)); }

}  // namespace

TEST(Constants, Su2) {
  const est::Constants k;
  EXPECT_EQ(k.n, 2);
  EXPECT_NEAR(k.r, std::sqrt(2.0) * kPi, 1e-15);
  EXPECT_NEAR(k.b(), 2.0 * std::exp(8.0 * std::sqrt(2.0) * kPi), 1e-12 * k.b());
  EXPECT_NEAR(k.c(), 8.0 * std::sqrt(2.0), 1e-14);
  // r bounds the principal log on SU(2)
  auto rng = make_rng(1);
  for (int i = 0; i < 200; ++i) EXPECT_LE(log_of(random_special_unitary(2, rng)).norm(), k.r + 1e-12);
}

TEST(Growth, Origin) {
  const auto rep = est::growth_bound_scan({ModuliPoint{identity(2), zero_triple(2)}});
  ASSERT_EQ(rep.samples.size(), 1u);
  EXPECT_NEAR(rep.samples[0].left, 2.0, 1e-12);
  EXPECT_NEAR(rep.samples[0].right, est::Constants{}.b(), 1e-9 * rep.samples[0].right);
  EXPECT_TRUE(rep.samples[0].pass);
  EXPECT_TRUE(rep.samples[0].in_core);
}

TEST(Growth, SuTwoRayClosedForms) {
  // X = s T: P1 = s T1 / (1 + s t), so int |P1| = log(1 + s) / sqrt2 and
  // rho = s^2 / (2 (1 + s)).
  const est::Constants k;
  for (double s : {0.05, 0.2, 0.5, 0.9, 3.0, 10.0}) {
    const auto tr = psi_trajectory(on_ray(s, identity(2)));
    const auto chk = est::check_trajectory(tr, k);
    EXPECT_NEAR(chk.rho, s * s / (2 * (1 + s)), 1e-8 * (1 + s));
    EXPECT_NEAR(chk.holder_left, std::log1p(s) / std::sqrt(2.0), 1e-8);
    EXPECT_NEAR(chk.holder_right, s / std::sqrt(1 + s), 1e-8);
    EXPECT_LE(chk.holder_left, chk.holder_right);
    EXPECT_LE(chk.gronwall_worst, 1.0);
    EXPECT_LE(chk.gronwall_worst_log, 1.0 + 1e-6);
  }
}

TEST(Growth, RandomPointsNearOrigin) {
  std::vector<ModuliPoint> pts;
  for (int i = 0; i < 60; ++i) {
    Rng rng = make_rng(77, static_cast<std::uint64_t>(i));
    std::uniform_real_distribution<double> uni(0.0, 0.9);
    auto p = est::draw_point(rng, [&](Rng& g) { return scaled(est::ray_sample(g, 1.0, 0.3), uni(g)); });
    ASSERT_TRUE(p.has_value());
    pts.push_back(*p);
  }
  const auto rep = est::growth_bound_scan(pts);
  EXPECT_EQ(rep.failures, 0);
  EXPECT_TRUE(rep.verdict);
  EXPECT_LE(rep.summary_value("max_gronwall_ratio_logk"), 1.0 + 1e-6);
}

TEST(Growth, SampleScan) {
  const auto pts = est::growth_samples(5, 200);
  EXPECT_GE(pts.size(), 190u);
  const auto rep = est::growth_bound_scan(pts);
  EXPECT_EQ(rep.failures, 0);
  EXPECT_LE(rep.summary_value("max_holder_excess"), 1e-9);
  RecordProperty("max_ratio", std::to_string(rep.max_ratio));
  RecordProperty("max_gronwall_logk", std::to_string(rep.summary_value("max_gronwall_ratio_logk")));
}

TEST(Growth, SamplesAreDeterministic) {
  const auto a = est::growth_samples(9, 6), b = est::growth_samples(9, 6);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].k, b[i].k);
    for (int j = 0; j < 3; ++j) EXPECT_EQ(a[i].x[static_cast<std::size_t>(j)], b[i].x[static_cast<std::size_t>(j)]);
  }
}

TEST(Properness, Examples) {
  const double r0 = std::sqrt(1.5);
  const auto rep = est::properness_scan({0.0, r0, 0.5, 1.0, 2.0, 4.0}, 3, 32);
  ASSERT_EQ(rep.samples.size(), 6u);
  EXPECT_EQ(rep.samples[0].right, 0.0);  // radius 0
  // the su(2) triple is the first direction: rho = 1/4 at |X| = sqrt(3/2)
  EXPECT_NEAR(potential_rho(su2_triple()), 0.25, 1e-9);
  EXPECT_LE(rep.samples[1].right, 0.25 + 1e-9);
}

TEST(Properness, DoublingRadii) {
  const auto rep = est::properness_scan({0.5, 1.0, 2.0, 4.0}, 11, 64);
  EXPECT_TRUE(rep.verdict);
  const double beta = rep.summary_value("beta");
  EXPECT_GT(beta, 0.0);
  EXPECT_TRUE(std::isfinite(beta));
  RecordProperty("beta", std::to_string(beta));
  for (const auto& s : rep.samples) EXPECT_GT(s.extra[1].second, 0.0) << s.descriptor;
}

TEST(Polynomial, Parser) {
  CotangentPoint q{Matrix::Identity(2, 2) * 2.0, Matrix::Zero(2, 2)};
  q.y(0, 1) = {0.0, 1.0};
  EXPECT_EQ(monomial("1")(q), Complex(1.0, 0.0));
  EXPECT_EQ(monomial("g11")(q), Complex(2.0, 0.0));
  EXPECT_EQ(monomial("g11^2*y12").degree, 3);
  EXPECT_EQ(monomial("g11^2*y12")(q), Complex(0.0, 4.0));
  EXPECT_EQ(monomial("G22*Y12^2")(q), Complex(-2.0, 0.0));
  EXPECT_THROW(monomial("x11"), InvalidProblem);
  EXPECT_THROW(monomial("g1"), InvalidProblem);
  EXPECT_THROW(monomial("g11*"), InvalidProblem);
  EXPECT_THROW(monomial("g33")(q), RankMismatch);
  EXPECT_EQ(trace_gy_cubed()(q), std::pow(Complex(0.0, 0.0), 3));
  const auto fam = default_monomials();
  EXPECT_EQ(fam.size(), 10u);
  for (const auto& u : fam) EXPECT_LE(u.degree, 6);
}

TEST(Domination, WindowsDecrease) {
  est::DominationOptions opt;
  opt.samples = 300;
  auto polys = default_monomials();
  polys.push_back(trace_gy_cubed());
  const auto [rep, per] = est::domination_scan(polys, 21, opt);
  for (const auto& d : per) {
    EXPECT_TRUE(d.decreasing) << d.name;
    std::string w;
    for (const auto& s : d.windows) w += std::to_string(s.count) + ":" + std::to_string(s.max_ratio) + " ";
    RecordProperty(d.name, w);
  }
  EXPECT_EQ(rep.failures, 0);
  // u = 1: the ratio is e^{-f}, bounded by e^{-lo} of each window
  for (const auto& s : per[0].windows)
    if (s.count > 0) EXPECT_LE(s.max_ratio, std::exp(-s.lo) + 1e-15);
}

TEST(Domination, RejectsHighDegree) {
  EXPECT_THROW(est::domination_scan({monomial("g11^7")}, 1), InvalidProblem);
}
