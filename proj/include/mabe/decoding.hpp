// Copyright 2026 The mabe-lab Authors
// SPDX-License-Identifier: Apache-2.0

// Decision rules over autoregressive Q-models: greedy, ancestral sampling
// with temperature, vanilla beam search and exact MAP search. Each
// probability-based rule is parameterized by a scorer that turns a step's
// Q-values into a token distribution (softmax or dual).
//
// Conventions shared by every decoder:
//  - EOS (token 0) ends a hypothesis; at step LengthRule::max_tokens(|x|)
//    EOS is forced and the step still pays its actual scorer log-probability.
//  - Sequence scores are sums of natural-log step probabilities; -inf (an
//    exact zero from the dual scorer) absorbs.
//  - Ties between equal scores go to the lexicographically smallest token
//    sequence, and ties between tokens to the lowest index.

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "mabe/core_math.hpp"
#include "mabe/error.hpp"
#include "mabe/qmodel.hpp"
#include "mabe/rng.hpp"
#include "mabe/tasks.hpp"

namespace mabe {

enum class Scorer { kSoftmax, kDual };

std::string scorer_tag(Scorer s);
Scorer scorer_from_tag(const std::string& tag);

/// The scorer's token distribution for one step.
TokenDistribution score(const QValues& q, Scorer scorer);

struct DecodeResult {
  std::vector<Token> tokens;           // ends with EOS
  std::vector<double> step_log_probs;  // natural log, one per token
  double total_log_prob = 0.0;
  Scorer scorer = Scorer::kSoftmax;
  bool forced_eos = false;
  std::size_t candidates_expanded = 0;  // Q-model evaluations
  /// exact_map only: the node budget ran out and this is the best so far.
  bool partial = false;
  /// greedy only: argmax of the scorer differed from argmax q at some step
  /// (possible only when the dual upper clip creates a tie).
  bool scorer_argmax_mismatch = false;
  /// First step whose scorer probability is exactly zero.
  std::optional<std::size_t> zero_step;

  double total_log10_prob() const;
};

/// argmax_a q_a at every step; the scorer only labels the step probabilities.
DecodeResult greedy_decode(const QModel& model, std::span<const Token> x, const LengthRule& rule,
                           Scorer scorer = Scorer::kSoftmax);

/// Ancestral sampling. Softmax uses softmax(q / beta); Dual uses the dual
/// distribution raised to 1/beta and renormalized. beta = 0 picks the argmax
/// of the tempered distribution. Step log-probs are reported under the
/// untempered scorer.
DecodeResult sample_decode(const QModel& model, std::span<const Token> x, Scorer scorer,
                           double beta, CounterRng& rng, const LengthRule& rule);

/// Vanilla beam search: all expansions of the live hypotheses are ranked by
/// cumulative log-prob, the best `beam_size` are kept, and kept hypotheses
/// ending in EOS move to a completed pool. Stops when the pool's best score
/// exceeds every live score or nothing is live. No length normalization.
DecodeResult beam_search(const QModel& model, std::span<const Token> x, Scorer scorer,
                         std::size_t beam_size, const LengthRule& rule);

inline constexpr std::size_t kDefaultNodeBudget = 10'000'000;

class NodeBudgetExceeded : public Error {
 public:
  NodeBudgetExceeded(std::size_t budget, DecodeResult best)
      : Error("exact MAP search exceeded its budget of " + std::to_string(budget) +
              " expansions"),
        best_(std::move(best)) {}
  /// Best completed hypothesis found before the budget ran out (flagged
  /// partial).
  const DecodeResult& best_so_far() const noexcept { return best_; }

 private:
  DecodeResult best_;
};

/// Depth-first search over the output tree. A prefix is abandoned as soon as
/// its cumulative log-prob is <= the best completed score, which is
/// admissible because step log-probs are <= 0.
DecodeResult exact_map(const QModel& model, std::span<const Token> x, Scorer scorer,
                       const LengthRule& rule, std::size_t node_budget = kDefaultNodeBudget);

struct SequenceScore {
  double log_prob = 0.0;
  std::optional<std::size_t> zero_step;
};

/// sum_t log P_scorer(y_t | x, y_<t). y must end with EOS.
SequenceScore sequence_log_prob(const QModel& model, std::span<const Token> x,
                                std::span<const Token> y, Scorer scorer);

}  // namespace mabe
