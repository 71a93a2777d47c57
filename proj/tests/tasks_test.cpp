// Copyright 2026 The mabe-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "mabe/tasks.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "test_support.hpp"

namespace mabe {
namespace {

SyntheticTask noisy(double eps, int d = 5, int len = 3) {
  return SyntheticTask(NoisyCopySpec{d, len, eps});
}

SyntheticTask synonym(double trunc, std::uint64_t seed = 4) {
  return SyntheticTask(make_synonym_spec(6, 2, 2, 2, trunc, seed));
}

// Product of oracle step probabilities along y.
double chained_probability(const SyntheticTask& task, std::span<const Token> x,
                           std::span<const Token> y) {
  double p = 1.0;
  for (std::size_t t = 0; t < y.size(); ++t) {
    const OracleStep step = true_token_distribution(task, {x, y.first(t)});
    EXPECT_FALSE(step.unreachable);
    p *= step.dist.probs[static_cast<std::size_t>(y[t])];
  }
  return p;
}

TEST(BanditTest, ValidatesProbabilities) {
  EXPECT_THROW(SyntheticTask(BanditSpec{3, {0.5, 0.4}}), InvalidArgument);
  EXPECT_THROW(SyntheticTask(BanditSpec{3, {0.5, 0.25, 0.25}}), InvalidArgument);
  EXPECT_THROW(SyntheticTask(BanditSpec{3, {1.5, -0.5}}), InvalidArgument);
  EXPECT_NO_THROW(SyntheticTask(BanditSpec{3, {0.7, 0.3}}));
}

TEST(BanditTest, SupportAndLengthFloor) {
  const SyntheticTask task(BanditSpec{4, {0.5, 0.0, 0.5}});
  EXPECT_EQ(task.length_rule().max_tokens(0), 1u);
  const auto support = enumerate_support(task, {});
  ASSERT_EQ(support.size(), 2u);
  EXPECT_EQ(support[0].y, (std::vector<Token>{1, kEos}));
  EXPECT_EQ(support[1].y, (std::vector<Token>{3, kEos}));
  const OracleStep first = true_token_distribution(task, {{}, {}});
  EXPECT_EQ(first.dist.probs[kEos], 0.0);
  const std::vector<Token> prefix{1};
  const OracleStep forced = true_token_distribution(task, {{}, prefix});
  EXPECT_EQ(forced.dist.probs[kEos], 1.0);
}

TEST(NoisyCopyTest, StepDistribution) {
  const SyntheticTask task = noisy(0.2);
  const std::vector<Token> x{2, 3, 1};
  const OracleStep s = true_token_distribution(task, {x, {}});
  EXPECT_NEAR(s.dist.probs[2], 0.85, 1e-15);
  EXPECT_NEAR(s.dist.probs[1], 0.05, 1e-15);
  EXPECT_EQ(s.dist.probs[kEos], 0.0);
  const std::vector<Token> full{4, 4, 4};
  const OracleStep end = true_token_distribution(task, {x, full});
  EXPECT_EQ(end.dist.probs[kEos], 1.0);
}

TEST(NoisyCopyTest, DeterministicWhenEpsZero) {
  const SyntheticTask task = noisy(0.0);
  const std::vector<Token> x{4, 1, 2};
  const auto support = enumerate_support(task, x);
  ASSERT_EQ(support.size(), 1u);
  EXPECT_EQ(support[0].y, (std::vector<Token>{4, 1, 2, kEos}));
  const std::vector<Token> off{3};
  EXPECT_TRUE(true_token_distribution(task, {x, off}).unreachable);
}

TEST(NoisyCopyTest, SupportCapIsReported) {
  const SyntheticTask task = noisy(0.1, 8, 7);
  const std::vector<Token> x(7, 1);
  try {
    enumerate_support(task, x, 1000);
    FAIL();
  } catch (const SupportCapExceeded& e) {
    EXPECT_EQ(e.cap(), 1000u);
    EXPECT_GT(e.lower_bound(), 1000u);
  }
}

TEST(SynonymTest, TableShape) {
  const SynonymSpec s = make_synonym_spec(6, 2, 3, 2, 0.1, 9);
  ASSERT_EQ(s.table.size(), 5u);
  for (const auto& row : s.table) {
    EXPECT_EQ(row.size(), 3u);
    for (const Phrase& ph : row) {
      EXPECT_GE(ph.tokens.size(), 1u);
      EXPECT_LE(ph.tokens.size(), 2u);
      for (Token t : ph.tokens) EXPECT_GT(t, kEos);
    }
  }
}

class SupportConsistencyTest : public ::testing::TestWithParam<int> {};

// Support probabilities sum to one and equal the product of the oracle's
// step distributions along each output.
TEST_P(SupportConsistencyTest, SupportMatchesStepOracle) {
  const std::vector<SyntheticTask> tasks{noisy(0.1), noisy(0.0), synonym(0.0), synonym(0.3),
                                         SyntheticTask(BanditSpec{4, {0.2, 0.5, 0.3}})};
  const SyntheticTask& task = tasks[static_cast<std::size_t>(GetParam())];
  CounterRng rng(17, static_cast<std::uint64_t>(GetParam()));
  for (int trial = 0; trial < 10; ++trial) {
    const std::vector<Token> x = sample_input(task, rng);
    const auto support = enumerate_support(task, x);
    double total = 0.0;
    for (std::size_t i = 0; i < support.size(); ++i) {
      total += support[i].prob;
      if (i > 0) {
        EXPECT_LT(support[i - 1].y, support[i].y);
      }
      EXPECT_NEAR(chained_probability(task, x, support[i].y), support[i].prob, 1e-12);
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

INSTANTIATE_TEST_SUITE_P(Tasks, SupportConsistencyTest, ::testing::Range(0, 5));

class SamplerTest : public ::testing::TestWithParam<int> {};

// sample_pair draws y from the enumerated support (chi-square at 0.001).
TEST_P(SamplerTest, SamplerMatchesSupport) {
  const std::vector<SyntheticTask> tasks{noisy(0.3, 4, 2), synonym(0.25),
                                         SyntheticTask(BanditSpec{4, {0.2, 0.5, 0.3}})};
  const SyntheticTask& task = tasks[static_cast<std::size_t>(GetParam())];
  CounterRng probe(5, 0);
  const std::vector<Token> x = sample_input(task, probe);
  const auto support = enumerate_support(task, x);
  std::map<std::vector<Token>, std::size_t> index;
  std::vector<double> probs;
  for (std::size_t i = 0; i < support.size(); ++i) {
    index[support[i].y] = i;
    probs.push_back(support[i].prob);
  }
  std::vector<std::size_t> counts(support.size(), 0);
  CounterRng rng(6, 0);
  const int n = 40000;
  int accepted = 0;
  while (accepted < n) {
    LabeledPair pair = sample_pair(task, rng);
    if (pair.x != x) continue;
    const auto it = index.find(pair.y);
    ASSERT_NE(it, index.end()) << "sampled output outside the support";
    ++counts[it->second];
    ++accepted;
  }
  EXPECT_GT(testing::chi_square_p_value(probs, counts), 0.001);
}

INSTANTIATE_TEST_SUITE_P(Tasks, SamplerTest, ::testing::Range(0, 3));

TEST(TasksTest, PairsEndWithSingleEos) {
  const SyntheticTask task = synonym(0.5);
  CounterRng rng(1, 1);
  for (int i = 0; i < 500; ++i) {
    const LabeledPair p = sample_pair(task, rng);
    ASSERT_FALSE(p.y.empty());
    EXPECT_EQ(p.y.back(), kEos);
    EXPECT_LE(p.y.size(), task.length_rule().max_tokens(p.x.size()) + 1);
    for (std::size_t t = 0; t + 1 < p.y.size(); ++t) EXPECT_NE(p.y[t], kEos);
  }
}

TEST(TasksTest, InputValidation) {
  const SyntheticTask task = noisy(0.1);
  const std::vector<Token> bad{0, 1, 2};
  EXPECT_THROW(enumerate_support(task, bad), InvalidArgument);
  const std::vector<Token> x{1, 2, 3};
  EXPECT_THROW(true_token_distribution(SyntheticTask(BanditSpec{3, {0.5, 0.5}}), {x, {}}),
               InvalidArgument);
}

}  // namespace
}  // namespace mabe
