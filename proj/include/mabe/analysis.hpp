// Copyright 2026 The mabe-lab Authors
// SPDX-License-Identifier: Apache-2.0

// Executable checks of the formal results (the gradient identity, the tabular
// fixed point and its landscape, the utility oracles) and the decoder
// evaluation table.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mabe/core_math.hpp"
#include "mabe/decoding.hpp"
#include "mabe/qmodel.hpp"
#include "mabe/tasks.hpp"

namespace mabe {

// ---------------------------------------------------------------------------
// Gradient identity: grad log P = grad J_MABE + sum_t cov_t.

struct GradientIdentityReport {
  std::vector<double> logp_grad;  // central differences of J_seq
  std::vector<double> jmabe_grad;  // central differences of eval_j_mabe
  std::vector<double> cov_grad;   // backprop of cov_coefficients, per sequence
  /// max_i |logp - jmabe - cov| / max(max_i |logp|, 1e-12)
  double max_relative_residual = 0.0;
  std::size_t worst_coordinate = 0;
  /// Same identity with all three terms computed by backprop of the
  /// coefficient vectors (mle, mabe(0), cov).
  double analytic_relative_residual = 0.0;
};

GradientIdentityReport verify_gradient_identity(const QModel& model,
                                                std::span<const LabeledPair> batch, double h);

// ---------------------------------------------------------------------------
// Tabular fixed point of J(q) = E_Ptrue[Q] - E_softmax(q)[Q].

struct FixedPointConfig {
  double lr = 0.5;
  double tol = 1e-10;
  long max_steps = 2'000'000;
};

struct FixedPointReport {
  std::vector<double> p_true;
  std::vector<double> q_star;
  std::vector<double> p_star;  // softmax(q_star)
  std::vector<double> dual;    // dual_distribution(q_star)
  std::vector<double> residuals;
  std::optional<double> margin;
  std::optional<double> undesired_spread;
  double objective = 0.0;
  double max_gradient = 0.0;
  long steps = 0;
  bool converged = false;
};

double fixed_point_objective(std::span<const double> p_true, std::span<const double> q);
std::vector<double> fixed_point_gradient(std::span<const double> p_true,
                                         std::span<const double> q);

FixedPointReport tabular_fixed_point(std::span<const double> p_true,
                                     const FixedPointConfig& config = {});

/// Random target over d in [2, max_d] actions with a random strict support:
/// between 1 and d-1 actions get weights uniform in [0.05, 1], normalized.
std::vector<double> random_fixed_point_target(CounterRng& rng, int max_d);

struct LandscapeGrid {
  double lo = -8.0;
  double hi = 4.0;
  double step = 1e-3;
};

struct LandscapeMaximum {
  double q_free = 0.0;
  double objective = 0.0;
};

struct LandscapeReport {
  int gauge_token = 0;
  std::vector<double> q_free;
  std::vector<double> objective;
  std::vector<LandscapeMaximum> maxima;  // refined by bisection on the derivative
};

/// Two-action cross-section: q[gauge] = 0 and the other coordinate sweeps the
/// grid.
LandscapeReport j_landscape(std::span<const double> p_true, int gauge_token,
                            const LandscapeGrid& grid = {});

// ---------------------------------------------------------------------------
// Utilities over outputs.

enum class Similarity { kExactMatch, kTokenOverlapF1, kNegNormalizedEditDistance };
enum class Aggregation { kAverage, kMaxOverSupport };

std::string similarity_tag(Similarity s);
Similarity similarity_from_tag(const std::string& tag);
std::string aggregation_tag(Aggregation a);
Aggregation aggregation_from_tag(const std::string& tag);

struct UtilitySpec {
  Similarity delta = Similarity::kExactMatch;
  Aggregation aggregation = Aggregation::kAverage;
};

/// Similarity of candidate a to reference y. EOS tokens are ignored.
double similarity(Similarity s, std::span<const Token> a, std::span<const Token> y);

double utility(const UtilitySpec& spec, std::span<const Token> a,
               std::span<const SupportEntry> support);

/// Index of the most probable support member (first on ties).
std::size_t support_argmax(std::span<const SupportEntry> support);

struct OracleReport {
  std::string check;
  std::size_t instances = 0;
  std::size_t passed = 0;
  std::vector<std::string> skipped;
  std::vector<std::string> counterexamples;
};

OracleReport map_optimality_check(const SyntheticTask& task, const UtilitySpec& utility,
                                  std::size_t n, std::uint64_t seed);

OracleReport sampling_soundness_check(const SyntheticTask& task, const UtilitySpec& utility,
                                      std::size_t n, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Decoder evaluation.

enum class RuleKind { kGreedy, kSample, kBeam, kMap };

std::string rule_tag(RuleKind k);
RuleKind rule_from_tag(const std::string& tag);

struct DecisionRule {
  RuleKind kind = RuleKind::kGreedy;
  double beta = 1.0;         // sample only
  std::size_t beam = 1;      // beam only

  std::string label() const;
};

DecodeResult run_rule(const QModel& model, std::span<const Token> x, const DecisionRule& rule,
                      Scorer scorer, const LengthRule& length, CounterRng& rng);

struct EvalRow {
  DecisionRule rule;
  Scorer scorer = Scorer::kSoftmax;
  std::size_t instances = 0;
  double exact_match = 0.0;
  double expected_utility = 0.0;
  double mean_log10_own = 0.0;  // over finite values only
  std::size_t own_zero_count = 0;
  double mean_log10_reference = 0.0;
  std::size_t reference_zero_count = 0;
  double mean_log10_empty = 0.0;
  std::size_t empty_zero_count = 0;
  double kl = 0.0;  // mean over instances with no zero-mass support member
  std::size_t kl_infinite_count = 0;
  double ece = 0.0;
  std::size_t ece_tokens = 0;
};

struct EvalTable {
  std::vector<EvalRow> rows;
};

struct EvalSuite {
  std::vector<DecisionRule> rules;
  std::vector<Scorer> scorers;
  UtilitySpec utility;
};

/// Sequence-level KL(P_true || P_scorer) by enumeration. Returns +inf when a
/// support member has zero model mass; `zero_support` counts those members.
double sequence_kl(const QModel& model, std::span<const Token> x,
                   std::span<const SupportEntry> support, Scorer scorer,
                   std::size_t* zero_support = nullptr);

EvalTable evaluate_decoders(const QModel& model, const SyntheticTask& task,
                            const EvalSuite& suite, std::size_t n, std::uint64_t seed);

}  // namespace mabe
