#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "thingap/geometry.hpp"

using namespace thingap;

namespace {

Eigen::Matrix<double, 1, 1> t1(double x) { return Eigen::Matrix<double, 1, 1>(x); }

}  // namespace

TEST(Delta, EqualsEpsilonAtOrigin) {
  for (double eps : {1e-3, 0.01, 0.5}) {
    const auto g = GapGeometry<2>::power(eps, 0.5);
    EXPECT_DOUBLE_EQ(g.delta(t1(0.0)), eps);
  }
}

TEST(Delta, SymmetricPowerProfile) {
  const auto g = GapGeometry<2>::power(0.01, 0.5);
  for (double t : {0.1, 0.37, 1.0}) EXPECT_NEAR(g.delta(t1(t)), 0.01 + 2 * std::pow(t, 1.5), 1e-15);
}

TEST(Delta, MatchesIndependentProfileEvaluation) {
  const auto g = GapGeometry<3>::power(0.02, 0.3, 2.0, -0.5);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-0.7, 0.7);
  for (int k = 0; k < 200; ++k) {
    const Eigen::Vector2d xp(u(rng), u(rng));
    const double r = xp.norm();
    EXPECT_NEAR(g.delta(xp), 0.02 + 2.0 * std::pow(r, 1.3) + 0.5 * std::pow(r, 1.3), 1e-14);
  }
}

TEST(Delta, RejectsPointsOutsideUnitBall) {
  const auto g = GapGeometry<2>::power(0.1, 0.5);
  EXPECT_THROW(g.delta(t1(1.5)), DomainError);
}

TEST(Construction, RejectsBadParameters) {
  EXPECT_THROW(GapGeometry<2>::power(0.0, 0.5), DomainError);
  EXPECT_THROW(GapGeometry<2>::power(0.1, 1.0), DomainError);
  EXPECT_THROW(GapGeometry<2>::power(0.1, 0.0), DomainError);
}

TEST(Constants, PowerFamily) {
  const auto g = GapGeometry<2>::power(0.1, 0.5, 2.0, -1.0);
  EXPECT_DOUBLE_EQ(g.kappa0(), 1.5);
  EXPECT_DOUBLE_EQ(g.kappa1(), 3.0);
  EXPECT_NEAR(g.kappa2(), 3.0 * (1 + 1.5 * (1 + std::sqrt(2.0))), 1e-12);
}

TEST(Contains, MidpointAndBoundary) {
  const auto g = GapGeometry<2>::power(0.1, 0.5);
  EXPECT_TRUE(g.contains(1.0, Point2(0, 0)));
  EXPECT_FALSE(g.contains(1.0, Point2(0, 0.05)));
  EXPECT_TRUE(g.contains_closure(1.0, Point2(0, 0.05)));
  EXPECT_FALSE(g.contains(0.5, Point2(0.6, 0)));
}

TEST(Contains, AgreesWithRejectionOracle) {
  const double eps = 0.05, gam = 0.5;
  const auto g = GapGeometry<2>::power(eps, gam);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ux(-1.2, 1.2), uy(-1.2, 1.2);
  for (int k = 0; k < 10000; ++k) {
    const Point2 x(ux(rng), uy(rng));
    const double h = std::pow(std::abs(x.x()), 1 + gam);
    const bool oracle = std::abs(x.x()) <= 1.0 && -eps / 2 - h < x.y() && x.y() < eps / 2 + h;
    ASSERT_EQ(g.contains(1.0, x), oracle) << x.transpose();
  }
}

TEST(BoundaryPoint, NeckAndProfile) {
  const auto g = GapGeometry<2>::power(0.1, 0.5);
  EXPECT_EQ(g.boundary_point(Side::top, t1(0.0)), Point2(0, 0.05));
  EXPECT_EQ(g.boundary_point(Side::bottom, t1(0.0)), Point2(0, -0.05));
  const Point2 p = g.boundary_point(Side::top, t1(0.4));
  EXPECT_NEAR(p.y(), 0.05 + std::pow(0.4, 1.5), 1e-15);
}

TEST(Rescale, CenterAndRoundTrip) {
  const auto g = GapGeometry<2>::power(0.01, 0.5);
  const Point2 z(0.2, 0.003);
  const LocalRegion<2> reg(g, z, g.delta(t1(0.2)));
  const double d = g.delta(t1(0.2));
  const Point2 y = rescale_to_unit(reg, z);
  EXPECT_NEAR(y.x(), 0.0, 1e-15);
  EXPECT_NEAR(y.y(), z.y() / d, 1e-15);
  Rng rng(3);
  for (int k = 0; k < 100; ++k) {
    const Point2 x = reg.sample(rng);
    EXPECT_LT((rescale_from_unit(reg, rescale_to_unit(reg, x)) - x).norm(), 1e-12);
  }
}

TEST(Rescale, CornerLandsOnUnitCellBoundary) {
  const auto g = GapGeometry<2>::power(0.01, 0.5);
  const LocalRegion<2> reg(g, Point2(0.1, 0.0), 1.0);
  const double d = g.delta(t1(0.1));
  const Point2 corner(0.1 + d, g.upper(t1(0.1 + d)));
  const Point2 y = rescale_to_unit(reg, corner);
  EXPECT_NEAR(std::abs(y.x()), 1.0, 1e-12);
  EXPECT_TRUE(unit_cell_contains(reg, y, 1.0, 1e-12));
  EXPECT_FALSE(unit_cell_contains(reg, y, 1.0, 0.0));
}

TEST(Rescale, RejectsPointsOutsideCell) {
  const auto g = GapGeometry<2>::power(0.01, 0.5);
  const LocalRegion<2> reg(g, Point2(0.0, 0.0), 0.01);
  EXPECT_THROW(rescale_to_unit(reg, Point2(0.5, 0.0)), DomainError);
}

TEST(Invariants, PowerFamilyEnvelopeHolds) {
  for (double eps : {0.1, 0.01, 0.001}) {
    const auto g = GapGeometry<2>::power(eps, 0.5);
    const auto inv = check_invariants(g, 1000);
    EXPECT_TRUE(inv.ok(g.kappa0(), g.kappa1())) << eps;
    EXPECT_NEAR(inv.measured_kappa0, 1.5, 1e-9);
    EXPECT_NEAR(inv.measured_kappa1, 1.5, 1e-9);
    EXPECT_GE(inv.min_delta_over_eps, 1.0);
    // delta <= 3 eps in the inner regime, delta ~ 2|z'|^{3/2} outside.
    EXPECT_LE(inv.inner_ratio_max, 3.0 + 1e-12);
    EXPECT_GE(inv.outer_ratio_min, 2.0);
    EXPECT_LE(inv.outer_ratio_max, 3.0 + 1e-12);
  }
}

TEST(Invariants, ThreeDimensional) {
  const auto g = GapGeometry<3>::power(0.01, 0.4, 1.0, -2.0);
  const auto inv = check_invariants(g, 1000);
  EXPECT_TRUE(inv.ok(g.kappa0(), g.kappa1()));
  EXPECT_NEAR(inv.measured_kappa0, 1.4, 1e-9);
  EXPECT_NEAR(inv.measured_kappa1, 2.8, 1e-9);
}

TEST(Invariants, DeltaIsEven) {
  const auto g = GapGeometry<2>::power(0.03, 0.5, 1.0, -0.3);
  for (const auto& xp : tangential_samples<2>(500)) EXPECT_DOUBLE_EQ(g.delta(xp), g.delta(Eigen::Matrix<double, 1, 1>(-xp)));
}

TEST(Invariants, CustomProfileKinkIsCaught) {
  using P = BoundaryProfile<2>;
  // |x'| has a kink at 0: the gradient rule cannot vanish there.
  const P kink = P::custom([](const P::Tangent& x) { return std::abs(x[0]); },
                           [](const P::Tangent& x) { return P::Tangent(x[0] >= 0 ? 1.0 : -1.0); });
  const GapGeometry<2> g(0.1, 0.5, kink, P::flat());
  EXPECT_TRUE(std::isnan(g.kappa0()));
  const auto inv = check_invariants(g, 200);
  EXPECT_FALSE(inv.ok(g.kappa0(), g.kappa1()));
}

TEST(Samples, InteriorSamplesAreInside) {
  const auto g = GapGeometry<2>::power(0.001, 0.5);
  for (const auto& x : interior_samples<2>(g, 1000)) EXPECT_TRUE(g.contains(1.0, x));
}
