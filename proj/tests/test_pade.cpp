#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "platoon/norms.hpp"
#include "platoon/pade.hpp"
#include "support.hpp"

using namespace platoon;
using namespace platoon::test;

TEST(PadeExp, ZeroDelayIsConstantOne) {
  for (int n = 1; n <= kMaxPadeOrder; ++n) {
    const RationalTF tf = pade_exp(0.0, n);
    EXPECT_EQ(tf.num[0], 1.0);
    EXPECT_EQ(tf.den[0], 1.0);
    for (std::size_t k = 1; k < tf.num.size(); ++k) {
      EXPECT_EQ(tf.num[k], 0.0);
      EXPECT_EQ(tf.den[k], 0.0);
    }
  }
}

TEST(PadeExp, FirstOrderClosedForm) {
  for (double theta : {0.1, 0.7, 1.5}) {
    const RationalTF tf = pade_exp(theta, 1);
    ASSERT_EQ(tf.num.size(), 2u);
    EXPECT_DOUBLE_EQ(tf.num[0], 1.0);
    EXPECT_DOUBLE_EQ(tf.num[1], -theta / 2.0);
    EXPECT_DOUBLE_EQ(tf.den[0], 1.0);
    EXPECT_DOUBLE_EQ(tf.den[1], theta / 2.0);
  }
}

TEST(PadeExp, CoefficientsMatchFactorialFormula) {
  for (int n = 1; n <= kMaxPadeOrder; ++n) {
    const RationalTF tf = pade_exp(1.0, n);
    for (int k = 0; k <= n; ++k) {
      const double c = factorial(2 * n - k) * factorial(n) / (factorial(2 * n) * factorial(k) * factorial(n - k));
      EXPECT_NEAR(tf.den[k], c, 1e-14 * c + 1e-300);
      EXPECT_NEAR(tf.num[k], (k % 2 ? -c : c), 1e-14 * c + 1e-300);
    }
  }
}

TEST(PadeExp, AllPassOnRandomPoints) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> th(0.0, 3.0), w(0.0, 50.0);
  std::uniform_int_distribution<int> n(1, kMaxPadeOrder);
  for (int i = 0; i < 1000; ++i) {
    const RationalTF tf = pade_exp(th(rng), n(rng));
    ASSERT_NEAR(std::abs(freq_response(tf, w(rng))), 1.0, 1e-12);
  }
  EXPECT_NEAR(std::abs(freq_response(pade_exp(0.1, 5), 1.0)), 1.0, 1e-12);
  EXPECT_NEAR(std::abs(freq_response(pade_exp(0.1, 5), 3.0)), 1.0, 1e-12);
}

TEST(PadeExp, SeriesMatchesExponentialThroughOrder2N) {
  for (int n = 1; n <= 5; ++n) {
    for (double theta : {0.1, 1.0, 1.5}) {
      const RationalTF tf = pade_exp(theta, n);
      const auto q = series_quotient(tf.num, tf.den, static_cast<std::size_t>(2 * n + 2));
      for (int m = 0; m <= 2 * n; ++m) {
        const double want = std::pow(-theta, m) / factorial(m);
        ASSERT_NEAR(q[m], want, 1e-12 * std::max(1.0, std::abs(want))) << "N=" << n << " m=" << m;
      }
      // The first unmatched coefficient differs.
      const double next = std::pow(-theta, 2 * n + 1) / factorial(2 * n + 1);
      EXPECT_GT(std::abs(q[2 * n + 1] - next), 1e-6 * std::abs(next));
    }
  }
}

TEST(PadeExp, RejectsOrderOutOfRange) {
  EXPECT_THROW((void)pade_exp(0.1, 0), ConfigError);
  EXPECT_THROW((void)pade_exp(0.1, kMaxPadeOrder + 1), ConfigError);
  EXPECT_THROW((void)pade_exp(-0.1, 3), ConfigError);
}

TEST(ApproxTF, DegreesAndProperness) {
  for (int n = 1; n <= 6; ++n) {
    const RationalTF tf = approx_tf(DelayTF::from(kCase1Params, kUnc), n);
    EXPECT_EQ(tf.den_degree(), static_cast<std::size_t>(3 + n));
    EXPECT_LT(tf.num_degree(), tf.den_degree());
  }
}

TEST(ApproxTF, ExactWithoutDelay) {
  VehicleParams p = kCase1Params;
  p.theta = 0.0;
  const DelayTF tf = DelayTF::from(p, kUnc);
  const RationalTF r = approx_tf(tf, 5);
  for (double w : {0.01, 0.5, 2.5, 40.0}) EXPECT_NEAR(rational_magnitude(r, w), exact_magnitude(tf, w), 1e-12);
}

TEST(ApproxTF, ExactWithoutFeedforward) {
  Gains k = kUnc;
  k.k4 = 0.0;
  const DelayTF tf = DelayTF::from(kCase1Params, k);
  const RationalTF r = approx_tf(tf, 5);
  EXPECT_EQ(r.num_degree(), 1u + 5u);
  for (double w : {0.01, 0.5, 2.5, 40.0}) EXPECT_NEAR(rational_magnitude(r, w), exact_magnitude(tf, w), 1e-12);
}

TEST(ApproxTF, UnitDcGain) {
  for (const Gains& k : {kUnc, kStar1, kZero1}) {
    const RationalTF r = approx_tf(DelayTF::from(kCase1Params, k), 5);
    const auto v = freq_response(r, 0.0);
    EXPECT_DOUBLE_EQ(v.real(), 1.0);
    EXPECT_EQ(v.imag(), 0.0);
  }
}

TEST(ApproxTF, MatchesDirectSurrogateEvaluation) {
  // Oracle: the surrogate is the delay TF with e^{-theta s} replaced by P/Q.
  const RationalTF delay = pade_exp(kCase1Params.theta, 5);
  for (double w : {0.2, 1.3, 4.0}) {
    const cd s(0.0, w);
    cd p = 0.0, q = 0.0;
    for (std::size_t k = delay.num.size(); k-- > 0;) {
      p = p * s + delay.num[k];
      q = q * s + delay.den[k];
    }
    const auto& k = kUnc;
    const cd num = k.k4 * s * s * (p / q) + k.k2 * s + k.k1;
    const cd den = 0.45 * s * s * s + (1.0 - k.k3) * s * s + (k.k1 + k.k2) * s + k.k1;
    const cd want = num / den;
    const cd got = freq_response(approx_tf(DelayTF::from(kCase1Params, kUnc), 5), w);
    EXPECT_NEAR(std::abs(got - want), 0.0, 1e-12);
  }
}

TEST(ApproxTF, PadeBeatsTaylorOnPlottingBand) {
  for (const Gains& k : {kUnc, kStar1}) {
    const DelayTF tf = DelayTF::from(kCase1Params, k);
    const RationalTF r = approx_tf(tf, 5);
    double pade = 0.0, taylor = 0.0;
    for (int i = 0; i <= 5000; ++i) {
      const double w = 0.01 + 5.0 * i / 5000.0;
      const double e = direct_magnitude(kCase1Params, k, w);
      pade = std::max(pade, std::abs(100.0 * (e - rational_magnitude(r, w)) / e));
      taylor = std::max(taylor, std::abs(100.0 * (e - taylor_magnitude(tf, w)) / e));
    }
    EXPECT_LT(pade, taylor);
    EXPECT_LT(pade, 0.5);
  }
}

TEST(ApproxTF, TaylorErrorAboveFifthOrderPadeAtBandEnd) {
  const DelayTF tf = DelayTF::from(kCase1Params, kUnc);
  const RationalTF r = approx_tf(tf, 5);
  const double e = exact_magnitude(tf, 5.0);
  EXPECT_GT(std::abs(taylor_magnitude(tf, 5.0) - e), std::abs(rational_magnitude(r, 5.0) - e));
}

TEST(ApproxTF, BandErrorNonIncreasingInOrder) {
  for (const Gains& k : {kUnc, kStar1}) {
    const DelayTF tf = DelayTF::from(kCase1Params, k);
    auto exact = [&](double w) { return exact_magnitude(tf, w); };
    double prev = INFINITY;
    for (int n = 1; n <= 5; ++n) {
      const RationalTF r = approx_tf(tf, n);
      auto approx = [&](double w) { return rational_magnitude(r, w); };
      const double err = max_abs_percent(relative_error_profile(exact, approx, 0.01, 5.01, 2001));
      EXPECT_LE(err, prev + 1e-10) << "N=" << n;
      prev = err;
    }
  }
}

TEST(FreqResponse, ConstantFunction) {
  const RationalTF c{{2.0}, {1.0}};
  for (double w : {0.0, 1.0, 100.0}) {
    EXPECT_EQ(freq_response(c, w), cd(2.0, 0.0));
  }
}

TEST(FreqResponse, PoleOnImaginaryAxisIsDomainError) {
  const RationalTF integrator{{1.0}, {0.0, 1.0}};
  EXPECT_THROW((void)freq_response(integrator, 0.0), DomainError);
  EXPECT_THROW((void)rational_magnitude(integrator, 0.0), DomainError);
  EXPECT_NEAR(rational_magnitude(integrator, 2.0), 0.5, 1e-15);
}
