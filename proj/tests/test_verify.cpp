#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "thingap/report_io.hpp"
#include "thingap/verify.hpp"

using namespace thingap;

namespace {

const BlowupReport& default_sweep() {
  static const BlowupReport r = run_sweep(SweepPlan{});
  return r;
}

BoundaryData<2> equal_polynomial_data() {
  const std::array<Eigen::VectorXd, 3> c{Eigen::Vector2d(0.5, 0.0), Eigen::Vector2d(1.0, 0.0), Eigen::Vector2d(0.0, 0.5)};
  return BoundaryData<2>::polynomial(c, c);
}

}  // namespace

TEST(FitRate, ExactPowerLaws) {
  std::vector<std::pair<double, double>> a, b;
  for (double s : {1e-1, 1e-2, 1e-3, 1e-4}) {
    a.emplace_back(s, 1.0 / s);
    b.emplace_back(s, 7.0 * std::pow(s, 2.0 / 3.0));
  }
  const RateFit fa = fit_rate(a), fb = fit_rate(b);
  EXPECT_NEAR(fa.slope, -1.0, 1e-12);
  EXPECT_NEAR(fa.intercept, 0.0, 1e-12);
  EXPECT_NEAR(fb.slope, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(std::exp(fb.intercept), 7.0, 1e-10);
  EXPECT_NEAR(fb.half_width, 0.0, 1e-10);
}

TEST(FitRate, RobustToFivePercentNoise) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> noise(-0.05, 0.05);
  std::vector<std::pair<double, double>> p;
  for (double s = 1e-4; s <= 1.0; s *= 3.0) p.emplace_back(s, 2.0 * s * (1.0 + noise(rng)));
  const RateFit f = fit_rate(p);
  EXPECT_NEAR(f.slope, 1.0, 0.05);
  EXPECT_LE(std::abs(f.slope - 1.0), f.half_width + 1e-12);
}

TEST(FitRate, RejectsDegenerateInput) {
  EXPECT_THROW(fit_rate({{0.1, 1.0}, {0.01, 2.0}}), ConfigError);
  EXPECT_THROW(fit_rate({{0.1, 1.0}, {0.01, 0.0}, {0.001, 2.0}}), DomainError);
  EXPECT_THROW(fit_rate({{0.1, 1.0}, {0.1, 2.0}, {0.1, 3.0}}), DomainError);
}

TEST(SweepPlan, Validation) {
  SweepPlan p;
  p.epsilons = {0.1, 0.01};
  EXPECT_THROW(p.validate(), ConfigError);
  p.epsilons = {0.1, 0.1, 0.01};
  EXPECT_THROW(p.validate(), ConfigError);
  p.epsilons = {0.1, 0.01, 0.001};
  p.gamma = 1.0;
  EXPECT_THROW(p.validate(), ConfigError);
}

TEST(Sweep, DefaultLameBlowsUpLikeInverseEpsilon) {
  const BlowupReport& r = default_sweep();
  ASSERT_EQ(r.records.size(), 5u);
  EXPECT_NEAR(r.rho, 1.0, 0.15);
  EXPECT_EQ(r.jump_component, 0);
  for (std::size_t k = 1; k < r.records.size(); ++k) EXPECT_GT(r.records[k].m_center, r.records[k - 1].m_center);
  EXPECT_TRUE(r.all_reliable);
  EXPECT_LE(r.superposition_max, 10 * solver_tolerance);
  EXPECT_TRUE(judge_sweep(r).pass);
}

TEST(Sweep, EnvelopesAreStable) {
  const BlowupReport& r = default_sweep();
  EXPECT_TRUE(r.profile_check.pass);
  EXPECT_LT(r.profile_check.ratio, 3.0);
  EXPECT_TRUE(r.lower_check.applicable);
  EXPECT_TRUE(r.lower_check.pass);
  EXPECT_TRUE(r.envelopes_consistent);
  for (const auto& rec : r.records) EXPECT_GE(rec.c_upper, 0.0);
}

TEST(Sweep, LateralClosureBarelyMatters) {
  const BlowupReport& r = default_sweep();
  EXPECT_DOUBLE_EQ(r.lateral.epsilon, 1e-3);
  EXPECT_TRUE(r.lateral.pass) << r.lateral.max_relative_difference;
}

TEST(Sweep, ProfileCheckCatchesWrongExponent) {
  BlowupReport bad = default_sweep();
  // Fault injection: an extra eps^{-1/2} factor breaks the 1/eps envelope.
  for (auto& rec : bad.records)
    for (auto& s : rec.profile) s.grad_norm *= std::pow(rec.epsilon, -0.5);
  EXPECT_FALSE(check_profile(bad, SweepPlan{}.data, 0.5).pass);
}

TEST(Sweep, EqualDataStaysBounded) {
  SweepPlan p;
  p.data = equal_polynomial_data();
  p.lateral_check = false;
  const BlowupReport r = run_sweep(p);
  EXPECT_EQ(r.jump_component, -1);
  EXPECT_NEAR(r.rho, 0.0, 0.15);
  EXPECT_FALSE(r.lower_check.applicable);
  EXPECT_TRUE(judge_sweep(r).pass);
}

TEST(Sweep, ScalarIdentityHasUnitConstant) {
  SweepPlan p;
  p.coefficients = identity_system(1, 2);
  p.data = BoundaryData<2>::constant_jump(Eigen::VectorXd::Ones(1), Eigen::VectorXd::Zero(1));
  p.lateral_check = false;
  const BlowupReport r = run_sweep(p);
  EXPECT_NEAR(r.rho, 1.0, 0.1);
  // Across the neck u is close to ubar, whose vertical slope is 1/eps.
  EXPECT_NEAR(r.records.back().c_lower, 1.0, 0.05);
  EXPECT_NEAR(r.records.back().m_center * 1e-3, 1.0, 0.05);
}

TEST(Energy, EqualConstantDataIsDegenerate) {
  SweepPlan p;
  p.data = BoundaryData<2>::constant_jump(Eigen::Vector2d(1, 1), Eigen::Vector2d(1, 1));
  EnergyPlan ep;
  ep.mesh = MeshParams{8, 2.0, 0.02, 1.0};
  const EnergyReport e = check_energy_scaling(p, ep);
  EXPECT_TRUE(e.degenerate);
  EXPECT_TRUE(judge_energy(e).pass);
}

TEST(Energy, ExpectedExponentsAndOrdering) {
  SweepPlan p;
  EnergyPlan ep;
  ep.mesh = MeshParams{8, 1.0, 0.01, 1.0};
  const EnergyReport e = check_energy_scaling(p, ep);
  EXPECT_DOUBLE_EQ(e.expected_inner, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(e.expected_outer, 1.0);
  ASSERT_FALSE(e.degenerate);
  // Energies shrink with the gap and grow away from the neck.
  for (std::size_t k = 1; k < e.inner.size(); ++k) EXPECT_LT(e.inner[k].energy, e.inner[k - 1].energy);
  for (std::size_t k = 1; k < e.outer.size(); ++k) EXPECT_GT(e.outer[k].energy, e.outer[k - 1].energy);
  EXPECT_GT(e.inner_fit.slope, 0.0);
  EXPECT_GT(e.outer_fit.slope, 0.0);
}

TEST(Energy, RejectsShortFits) {
  EnergyPlan ep;
  ep.z_primes = {0.1, 0.2};
  EXPECT_THROW(check_energy_scaling(SweepPlan{}, ep), ConfigError);
}

TEST(Prop21, DefaultSweepIsStable) {
  SweepPlan p;
  const Prop21Sweep s = run_prop21(p, Prop21Settings{});
  ASSERT_EQ(s.reports.size(), p.epsilons.size());
  EXPECT_TRUE(s.stability.pass);
  EXPECT_TRUE(s.calibration_pass);
  for (const auto& r : s.reports) {
    EXPECT_TRUE(r.finite);
    EXPECT_TRUE(r.cells_comparable);
  }
  EXPECT_TRUE(s.pass);
}

TEST(Prop21, EqualConstantDataIsTrivial) {
  SweepPlan p;
  p.data = BoundaryData<2>::constant_jump(Eigen::Vector2d(1, 1), Eigen::Vector2d(1, 1));
  const Prop21Sweep s = run_prop21(p, Prop21Settings{});
  EXPECT_FALSE(s.stability.applicable);
  EXPECT_TRUE(s.stability.pass);
}

TEST(ManufacturedStudy, RefinementCountsAndSizes) {
  const auto st = manufactured_convergence(identity_system(1, 2), 3);
  ASSERT_EQ(st.h.size(), 4u);
  for (std::size_t k = 1; k < st.h.size(); ++k) {
    EXPECT_DOUBLE_EQ(st.h[k], 0.5 * st.h[k - 1]);
    EXPECT_EQ(st.triangles[k], 4 * st.triangles[k - 1]);
  }
}
