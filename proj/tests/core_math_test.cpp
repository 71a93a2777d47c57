// Copyright 2026 The mabe-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "mabe/core_math.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "mabe/rng.hpp"

namespace mabe {
namespace {

// Reference values below come from tests/oracles/compute_oracles.py (50-digit
// mpmath evaluation).
constexpr double kTol = 1e-12;

QValues q2(double a, double b) { return QValues({a, b}); }

TEST(QValuesTest, RejectsShortAndNonFinite) {
  EXPECT_THROW(QValues({1.0}), InvalidArgument);
  EXPECT_THROW(QValues({0.0, std::nan("")}), InvalidArgument);
  try {
    QValues({0.0, 1.0, std::numeric_limits<double>::infinity()});
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("2"), std::string::npos);
  }
}

TEST(SoftmaxTest, TwoTokenValues) {
  const TokenDistribution p = softmax(q2(1, 0));
  EXPECT_NEAR(p.probs[0], 0.7310585786300049, kTol);
  EXPECT_NEAR(p.probs[1], 0.2689414213699951, kTol);
  EXPECT_NEAR(log_sum_exp(q2(1, 0)), 1.3132616875182228, kTol);
  const TokenDistribution p2 = softmax(q2(2, 0));
  EXPECT_NEAR(p2.probs[0], 0.8807970779778824, kTol);
}

TEST(SoftmaxTest, ShiftInvariantAndNormalized) {
  CounterRng rng(11, 0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = 2 + rng.below(10);
    std::vector<double> q(d), shifted(d);
    const double c = rng.uniform(-50, 50);
    for (std::size_t a = 0; a < d; ++a) {
      q[a] = rng.uniform(-5, 5);
      shifted[a] = q[a] + c;
    }
    const TokenDistribution p = softmax(QValues(q));
    const TokenDistribution ps = softmax(QValues(shifted));
    double sum = 0.0;
    for (std::size_t a = 0; a < d; ++a) {
      sum += p.probs[a];
      EXPECT_NEAR(p.probs[a], ps.probs[a], 1e-12);
      EXPECT_NEAR(std::log(p.probs[a]), p.log_probs[a], 1e-12);
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(SoftmaxTest, UnderflowKeepsFiniteLogProb) {
  const TokenDistribution p = softmax(q2(0, -1000));
  EXPECT_EQ(p.probs[1], 0.0);
  EXPECT_TRUE(std::isfinite(p.log_probs[1]));
  EXPECT_NEAR(p.log_probs[1], -1000.0, 1e-9);
}

TEST(ExpectedQTest, LengthMismatchThrows) {
  const TokenDistribution p = softmax(q2(0, 0));
  EXPECT_THROW(expected_q(p, QValues({0, 0, 0})), InvalidArgument);
}

TEST(DualTest, TwoTokenValue) {
  const TokenDistribution d = dual_distribution(q2(1, 0));
  EXPECT_NEAR(d.probs[0], 0.9276705118714867, kTol);
  EXPECT_NEAR(d.probs[1], 0.07232948812851327, kTol);
}

TEST(DualTest, ClipsToOneHot) {
  const DualTransform t = dual_transform(q2(3, 0));
  EXPECT_NEAR(t.factors[0], 1.1422776195327003, kTol);
  EXPECT_NEAR(t.factors[1], -1.8577223804672997, kTol);
  EXPECT_EQ(t.dist.probs[0], 1.0);
  EXPECT_EQ(t.dist.probs[1], 0.0);
  EXPECT_EQ(t.dist.log_probs[1], -std::numeric_limits<double>::infinity());
  EXPECT_TRUE(t.upper_clip_bound);
  EXPECT_NEAR(t.normalizer, 1.0, kTol);
}

TEST(DualTest, UniformIsFixed) {
  const TokenDistribution d = dual_distribution(QValues({0.3, 0.3, 0.3, 0.3}));
  for (double p : d.probs) EXPECT_NEAR(p, 0.25, 1e-15);
}

TEST(DualTest, AlwaysADistribution) {
  CounterRng rng(4, 0);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t d = 2 + rng.below(12);
    std::vector<double> q(d);
    for (double& v : q) v = rng.uniform(-6, 6);
    const TokenDistribution p = dual_distribution(QValues(q));
    double sum = 0.0;
    for (double v : p.probs) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
      sum += v;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(CoefficientsTest, TwoTokenValues) {
  const QValues q = q2(1, 0);
  const StepCoefficients mle = mle_coefficients(q, 0);
  EXPECT_NEAR(mle.g[0], 0.2689414213699951, kTol);
  EXPECT_NEAR(mle.g[1], -0.2689414213699951, kTol);
  const StepCoefficients cov = cov_coefficients(q);
  EXPECT_NEAR(cov.g[0], 0.19661193324148185, kTol);
  EXPECT_NEAR(cov.g[1], -0.19661193324148185, kTol);
  const StepCoefficients m0 = mabe_coefficients(q, 0, 0.0);
  EXPECT_NEAR(m0.g[0], 0.07232948812851327, kTol);
  EXPECT_NEAR(m0.g[1], -0.07232948812851327, kTol);
  const StepCoefficients m2 = mabe_coefficients(q, 0, 2.0);
  EXPECT_NEAR(m2.g[0], 0.46555335461147697, kTol);
  EXPECT_NEAR(m2.g[1], -0.46555335461147697, kTol);
}

TEST(CoefficientsTest, LambdaOneIsBitwiseMle) {
  CounterRng rng(8, 0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = 2 + rng.below(8);
    std::vector<double> v(d);
    for (double& x : v) x = rng.uniform(-4, 4);
    const QValues q(v);
    const auto y = static_cast<Token>(rng.below(d));
    EXPECT_EQ(mabe_coefficients(q, y, 1.0).g, mle_coefficients(q, y).g);
  }
}

TEST(CoefficientsTest, SumToZeroAndInterpolate) {
  CounterRng rng(6, 1);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = 2 + rng.below(8);
    std::vector<double> v(d);
    for (double& x : v) x = rng.uniform(-4, 4);
    const QValues q(v);
    const auto y = static_cast<Token>(rng.below(d));
    const double lambda = rng.uniform(-3, 3);
    const auto mle = mle_coefficients(q, y).g;
    const auto cov = cov_coefficients(q).g;
    const auto mabe = mabe_coefficients(q, y, lambda).g;
    double s_mle = 0, s_cov = 0;
    for (std::size_t a = 0; a < d; ++a) {
      s_mle += mle[a];
      s_cov += cov[a];
      EXPECT_NEAR(mabe[a], mle[a] - (1 - lambda) * cov[a], 1e-12);
    }
    EXPECT_NEAR(s_mle, 0.0, 1e-12);
    EXPECT_NEAR(s_cov, 0.0, 1e-12);
  }
}

TEST(CoefficientsTest, SmoothedTarget) {
  const QValues q({0.5, -0.5, 1.0, 0.0});
  const auto plain = mle_coefficients(q, 2).g;
  EXPECT_EQ(smoothed_mle_coefficients(q, 2, 0.0).g, plain);
  const auto s = smoothed_mle_coefficients(q, 2, 0.2).g;
  const auto p = softmax(q).probs;
  EXPECT_NEAR(s[2], 0.8 + 0.05 - p[2], 1e-15);
  EXPECT_NEAR(s[0], 0.05 - p[0], 1e-15);
  EXPECT_THROW(smoothed_mle_coefficients(q, 2, 1.0), InvalidArgument);
}

TEST(CoefficientsTest, TokenOutOfRange) {
  EXPECT_THROW(mle_coefficients(q2(0, 0), 2), InvalidArgument);
  EXPECT_THROW(mle_coefficients(q2(0, 0), -1), InvalidArgument);
}

TEST(RescaleTest, TemperatureLimits) {
  const QValues q({0.1, 2.0, 2.0, -1.0});
  const TokenDistribution cold = temperature_rescale(q, 0.0);
  EXPECT_EQ(cold.probs, (std::vector<double>{0, 1, 0, 0}));
  const TokenDistribution one = temperature_rescale(q, 1.0);
  EXPECT_EQ(one.probs, softmax(q).probs);
  const TokenDistribution hot = temperature_rescale(q, 2.0);
  EXPECT_NEAR(hot.probs[1], softmax(QValues({0.05, 1.0, 1.0, -0.5})).probs[1], 1e-15);
  EXPECT_THROW(temperature_rescale(q, -1.0), InvalidArgument);
}

TEST(RescaleTest, PowerKeepsZeros) {
  const TokenDistribution p = TokenDistribution::from_probs({0.5, 0.0, 0.25, 0.25});
  const TokenDistribution same = power_rescale(p, 1.0);
  for (std::size_t a = 0; a < 4; ++a) EXPECT_NEAR(same.probs[a], p.probs[a], 1e-15);
  const TokenDistribution sharp = power_rescale(p, 0.5);
  EXPECT_NEAR(sharp.probs[0], 0.25 / 0.375, 1e-15);
  EXPECT_EQ(sharp.probs[1], 0.0);
  const TokenDistribution arg = power_rescale(p, 0.0);
  EXPECT_EQ(arg.probs, (std::vector<double>{1, 0, 0, 0}));
}

TEST(ArgmaxTest, TiesGoLow) {
  const std::vector<double> v{1.0, 3.0, 3.0, 2.0};
  EXPECT_EQ(argmax(v), 1u);
}

}  // namespace
}  // namespace mabe
