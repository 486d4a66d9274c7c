#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "platoon/model.hpp"
#include "support.hpp"

using namespace platoon;
using namespace platoon::test;

TEST(StateSpace, MatchesPlantDefinition) {
  const StateSpace ss = build_state_space(kCase1Params);
  EXPECT_DOUBLE_EQ(ss.A(2, 2), -1.0 / 0.45);
  EXPECT_DOUBLE_EQ(ss.A(2, 0), 0.0);
  EXPECT_DOUBLE_EQ(ss.A(2, 1), 0.0);
  EXPECT_DOUBLE_EQ(ss.A(0, 2), -1.0);
  EXPECT_DOUBLE_EQ(ss.B(2), 1.0 / 0.45);
  EXPECT_DOUBLE_EQ(ss.B(0), 0.0);
  EXPECT_DOUBLE_EQ(ss.B(1), 0.0);
  EXPECT_EQ(ss.D, Eigen::Vector3d(0.0, 1.0, 0.0));

  VehicleParams p = kCase1Params;
  p.tau = 0.0;
  EXPECT_EQ(build_state_space(p).A(0, 2), 0.0);
}

TEST(VehicleParams, RejectsInvalidConstants) {
  EXPECT_THROW((VehicleParams{1.0, 0.0, 1.0, 0.1}.validate()), ConfigError);
  EXPECT_THROW((VehicleParams{1.0, 0.45, -1.0, 0.1}.validate()), ConfigError);
  EXPECT_THROW((VehicleParams{-1.0, 0.45, 1.0, 0.1}.validate()), ConfigError);
  EXPECT_THROW((VehicleParams{1.0, 0.45, 1.0, -0.1}.validate()), ConfigError);
  EXPECT_NO_THROW(kCase1Params.validate());
}

TEST(DelayTF, CoefficientsFollowPlant) {
  const DelayTF tf = DelayTF::from(kCase1Params, kUnc);
  EXPECT_DOUBLE_EQ(tf.c3, 0.45);
  EXPECT_DOUBLE_EQ(tf.c2, 1.0 + 0.92);
  EXPECT_DOUBLE_EQ(tf.c1, 0.92 + 1.32);
  EXPECT_DOUBLE_EQ(tf.c0, 0.92);
  EXPECT_DOUBLE_EQ(tf.num_delayed, 0.72);
}

TEST(LocalStability, UnconstrainedDesignMargins) {
  const StabilityReport r = local_stability(kCase1Params, kUnc);
  EXPECT_TRUE(r.hurwitz);
  // Hand arithmetic: (0.92, 0.92 + 1.32, 1 + 0.92, 1.92 * 2.24 - 0.45 * 0.92).
  EXPECT_NEAR(r.margins[0], 0.92, 1e-12);
  EXPECT_NEAR(r.margins[1], 2.24, 1e-12);
  EXPECT_NEAR(r.margins[2], 1.92, 1e-12);
  EXPECT_NEAR(r.margins[3], 3.8868, 1e-12);
}

TEST(LocalStability, ZeroSpacingGainIsUnstable) {
  const StabilityReport r = local_stability(kCase1Params, Gains{0.0, 1.0, 0.0, 0.0});
  EXPECT_EQ(r.margins[0], 0.0);
  EXPECT_FALSE(r.hurwitz);
}

TEST(LocalStability, CaseTwoDesignIsHurwitz) {
  EXPECT_TRUE(local_stability(kCase2Params, kStar2).hurwitz);
  EXPECT_TRUE(local_stability(kCase1Params, kStar1).hurwitz);
}

TEST(LocalStability, EigenvaluesMatchClosedLoopMatrix) {
  const StabilityReport r = local_stability(kCase1Params, kStar1);
  EXPECT_NEAR(r.spectral_abscissa(), closed_loop_abscissa(kCase1Params, kStar1), 1e-9);
  // Product of roots equals -a0/a3 = -K k1 / T.
  const std::complex<double> prod = r.eigenvalues[0] * r.eigenvalues[1] * r.eigenvalues[2];
  EXPECT_NEAR(prod.real(), -kStar1.k1 / 0.45, 1e-9);
  EXPECT_NEAR(prod.imag(), 0.0, 1e-9);
  // Sum of roots equals the closed-loop trace -(1 - K k3) / T.
  const std::complex<double> sum = r.eigenvalues[0] + r.eigenvalues[1] + r.eigenvalues[2];
  EXPECT_NEAR(sum.real(), -(1.0 - kStar1.k3) / 0.45, 1e-9);
}

TEST(LocalStability, MarginsAgreeWithEigenvaluesOnRandomSamples) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> g(-3.0, 3.0), tau(0.0, 2.0), T(0.1, 1.0), K(0.5, 1.5);
  int checked = 0;
  for (int i = 0; i < 10000; ++i) {
    const VehicleParams p{tau(rng), T(rng), K(rng), 0.1};
    const Gains k{g(rng), g(rng), g(rng), g(rng)};
    const double sa = closed_loop_abscissa(p, k);
    if (std::abs(sa) < 1e-9) continue;
    const StabilityReport r = local_stability(p, k);
    ASSERT_EQ(r.hurwitz, sa < 0.0) << "sample " << i;
    ASSERT_NEAR(r.spectral_abscissa(), sa, 1e-6 * std::max(1.0, std::abs(sa)));
    ++checked;
  }
  EXPECT_GT(checked, 9900);
}

TEST(CubicRoots, NewtonFallbackMatchesCompanionSolver) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> c(-5.0, 5.0);
  for (int i = 0; i < 2000; ++i) {
    const double a3 = 0.1 + std::abs(c(rng)), a2 = c(rng), a1 = c(rng), a0 = c(rng);
    auto roots = cubic_roots_newton(a3, a2, a1, a0);
    for (const auto& r : roots) {
      const std::complex<double> v = ((a3 * r + a2) * r + a1) * r + a0;
      ASSERT_LT(std::abs(v), 1e-7 * (1.0 + std::abs(r) * std::abs(r) * std::abs(r)) * 10.0) << i;
    }
  }
  // Triple root at -1.
  auto roots = cubic_roots_newton(1.0, 3.0, 3.0, 1.0);
  for (const auto& r : roots) EXPECT_NEAR(r.real(), -1.0, 1e-4);
}

TEST(ExactMagnitude, MatchesDirectComplexEvaluationOnLogGrid) {
  for (const Gains& k : {kUnc, kStar1}) {
    const DelayTF tf = DelayTF::from(kCase1Params, k);
    for (int i = 0; i <= 600; ++i) {
      const double w = std::pow(10.0, -3.0 + 6.0 * i / 600.0);
      const double want = direct_magnitude(kCase1Params, k, w);
      ASSERT_NEAR(exact_magnitude(tf, w), want, 1e-12 * want + 1e-300) << "w = " << w;
    }
  }
  const DelayTF tf2 = DelayTF::from(kCase2Params, kStar2);
  for (double w : {0.01, 0.5, 1.0, 2.5, 10.0})
    EXPECT_NEAR(exact_magnitude(tf2, w), direct_magnitude(kCase2Params, kStar2, w), 1e-12);
}

TEST(ExactMagnitude, PointValueAtBandEdge) {
  const DelayTF tf = DelayTF::from(kCase1Params, kUnc);
  EXPECT_NEAR(exact_magnitude(tf, 2.5), direct_magnitude(kCase1Params, kUnc, 2.5), 1e-13);
}

TEST(ExactMagnitude, UnityAtZeroFrequencyWithFlatSlope) {
  for (const Gains& k : {kUnc, kStar1}) {
    const DelayTF tf = DelayTF::from(kCase1Params, k);
    EXPECT_LT(std::abs(exact_magnitude(tf, 1e-6) - 1.0), 1e-6);
    const double h = 1e-6, w = 1e-4;
    const double slope = (exact_magnitude(tf, w + h) - exact_magnitude(tf, w - h)) / (2 * h);
    EXPECT_LT(std::abs(slope), 1e-3);
  }
}

TEST(ExactMagnitude, DelayIndependentWithoutFeedforward) {
  Gains k = kUnc;
  k.k4 = 0.0;
  const DelayTF a = DelayTF::from(kCase1Params, k);
  const DelayTF b = DelayTF::from(kCase2Params, k);
  for (double w : {0.1, 0.7, 3.0}) {
    EXPECT_EQ(a.g_theta(w), 0.0);
    EXPECT_DOUBLE_EQ(exact_magnitude(a, w), exact_magnitude(b, w));
  }
}

TEST(ExactMagnitude, DegenerateDenominatorIsDomainError) {
  // k1 = 0 and c1 = 0, c2 = 0: den(jw) = T (jw)^3 vanishes at w = 0.
  const DelayTF tf = DelayTF::from(kCase1Params, Gains{0.0, 0.0, 1.0, 0.0});
  EXPECT_THROW((void)exact_magnitude(tf, 0.0), DomainError);
}

TEST(TaylorMagnitude, ExactWhenDelayOrFeedforwardVanishes) {
  VehicleParams p0 = kCase1Params;
  p0.theta = 0.0;
  const DelayTF a = DelayTF::from(p0, kUnc);
  Gains k = kUnc;
  k.k4 = 0.0;
  const DelayTF b = DelayTF::from(kCase1Params, k);
  for (double w : {0.05, 0.5, 2.0, 5.0}) {
    EXPECT_DOUBLE_EQ(taylor_magnitude(a, w), exact_magnitude(a, w));
    EXPECT_DOUBLE_EQ(taylor_magnitude(b, w), exact_magnitude(b, w));
  }
  const DelayTF c = DelayTF::from(kCase1Params, kUnc);
  EXPECT_NE(taylor_magnitude(c, 5.0), exact_magnitude(c, 5.0));
}

TEST(TaylorStringStability, HumanDriverGainsByHand) {
  VehicleParams p = kCase1Params;
  p.theta = 0.0;
  const auto t = taylor_string_stability(p, Gains{0.5, 0.2, 0.0, 0.0});
  EXPECT_NEAR(t.p, 0.2025, 1e-12);
  EXPECT_NEAR(t.q, -2.0 * 0.45 * 0.7 + 1.0, 1e-12);
  EXPECT_NEAR(t.r, 2.0 * 0.5 * (0.2 + 0.25 - 1.0), 1e-12);
  EXPECT_FALSE(t.ok());
}

TEST(TaylorStringStability, UnconstrainedDesignPasses) {
  EXPECT_TRUE(taylor_string_stability(kCase1Params, kUnc).ok());
}

TEST(TaylorStringStability, NegativeLeadingTermFailsBothCases) {
  VehicleParams p = kCase1Params;
  p.theta = 2.0;
  const auto t = taylor_string_stability(p, Gains{0.5, -1.0, 0.0, 1.0});
  EXPECT_LT(t.p, 0.0);
  EXPECT_FALSE(t.case1_ok);
  EXPECT_FALSE(t.case2_ok);
}

TEST(Eta, ActiveAtOptimalDesign) {
  EXPECT_NEAR(lemma1_eta(kCase1Params, kStar1), 0.0, 1e-3);
}

TEST(Eta, ExactZeroOnTheBoundary) {
  // k4 + k3 + tau k2 + tau^2 k1 / 2 = 1 / K.
  const Gains k{0.5, 0.25, 0.125, 1.0 - 0.125 - 0.25 - 0.25};
  EXPECT_EQ(lemma1_eta(kCase1Params, k), 0.0);
}

TEST(Eta, NegativeForHumanDriverGains) {
  EXPECT_NEAR(lemma1_eta(kCase1Params, Gains{0.5, 0.2, 0.0, 0.0}), -0.55, 1e-12);
}

TEST(Eta, CurvatureMatchesSecondDifference) {
  for (const Gains& k : {kUnc, Gains{0.5, 0.2, 0.0, 0.0}}) {
    const DelayTF tf = DelayTF::from(kCase1Params, k);
    // |F|^2 ~ 1 + c w^2 near 0, so |F| ~ 1 + c w^2 / 2 and the curvature of |F|^2 is 2c.
    const double h = 1e-3;
    auto f2 = [&](double w) { return std::pow(exact_magnitude(tf, w), 2); };
    const double second = (f2(2 * h) - 2 * f2(h) + f2(0.0)) / (h * h);
    EXPECT_NEAR(second / 2.0, zero_frequency_curvature(kCase1Params, k), 1e-3);
  }
}

TEST(Curvature, NonPositiveForStringStableDesigns) {
  for (const Gains& k : {kUnc, kStar1}) {
    const DelayTF tf = DelayTF::from(kCase1Params, k);
    const double h = 1e-3;
    const double d2 = (exact_magnitude(tf, 2 * h) - 2 * exact_magnitude(tf, h) + exact_magnitude(tf, 1e-12)) / (h * h);
    EXPECT_LE(d2, 1e-6);
  }
}
