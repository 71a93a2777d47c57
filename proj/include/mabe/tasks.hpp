// Copyright 2026 The mabe-lab Authors
// SPDX-License-Identifier: Apache-2.0

// Synthetic sequence tasks whose conditional distribution P_true(y_t | x, y_<t)
// is known in closed form or by exhaustive enumeration.

#pragma once

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "mabe/core_math.hpp"
#include "mabe/error.hpp"
#include "mabe/qmodel.hpp"
#include "mabe/rng.hpp"

namespace mabe {

/// Output length cap: EOS is forced at step max_tokens(|x|), so an output has
/// at most max_tokens(|x|) non-EOS tokens followed by EOS.
struct LengthRule {
  int per_input_token = 2;
  int minimum = 0;

  std::size_t max_tokens(std::size_t input_len) const noexcept {
    const std::size_t scaled = static_cast<std::size_t>(per_input_token) * input_len;
    const auto floor = static_cast<std::size_t>(minimum);
    return scaled > floor ? scaled : floor;
  }
};

/// One action token then EOS. probs[i] is the probability of token i + 1.
struct BanditSpec {
  int vocab_size = 3;
  std::vector<double> probs;
};

/// y_t = x_t with probability 1 - eps, otherwise uniform over the d - 1
/// non-EOS tokens (which may redraw x_t); EOS after |x| tokens.
struct NoisyCopySpec {
  int vocab_size = 5;
  int length = 3;
  double eps = 0.1;
};

struct Phrase {
  std::vector<Token> tokens;  // 1 to 3 non-EOS tokens
  double weight = 1.0;
};

/// Each input token independently emits one weighted phrase from its row;
/// the output is the concatenation, then EOS. With probability
/// `truncation_prob` only the first m phrases are kept, m uniform in
/// [0, |x| - 1] (so empty outputs occur).
struct SynonymSpec {
  int vocab_size = 6;
  int input_length = 2;
  std::vector<std::vector<Phrase>> table;  // table[token - 1]
  double truncation_prob = 0.0;
};

class SyntheticTask {
 public:
  using Kind = std::variant<BanditSpec, NoisyCopySpec, SynonymSpec>;

  explicit SyntheticTask(Kind kind);

  const Kind& kind() const noexcept { return kind_; }
  int vocab_size() const noexcept { return vocab_size_; }
  std::string tag() const;
  LengthRule length_rule() const noexcept { return rule_; }
  /// Configured input length (0 for Bandit).
  std::size_t input_length() const noexcept;

 private:
  Kind kind_;
  int vocab_size_;
  LengthRule rule_;
};

/// A random synonym table: every non-EOS input token gets `phrases_per_token`
/// phrases of length 1..max_phrase_len with weights drawn from (0.2, 1).
SynonymSpec make_synonym_spec(int vocab_size, int input_length, int phrases_per_token,
                              int max_phrase_len, double truncation_prob, std::uint64_t seed);

struct LabeledPair {
  std::vector<Token> x;
  std::vector<Token> y;  // ends with EOS; EOS appears only there
};

/// x from the task's input law, y drawn exactly from P_true(. | x).
LabeledPair sample_pair(const SyntheticTask& task, CounterRng& rng);

/// Input drawn from the task's input law alone.
std::vector<Token> sample_input(const SyntheticTask& task, CounterRng& rng);

struct OracleStep {
  TokenDistribution dist;
  /// Set when the prefix has zero probability under the task; dist is then
  /// uniform over the non-EOS tokens.
  bool unreachable = false;
};

/// P_true(. | x, y_<t) over all d tokens. One-hot EOS at the forced step.
OracleStep true_token_distribution(const SyntheticTask& task, const DecisionContext& ctx);

struct SupportEntry {
  std::vector<Token> y;
  double prob = 0.0;
};

inline constexpr std::size_t kDefaultSupportCap = 100000;

class SupportCapExceeded : public Error {
 public:
  SupportCapExceeded(std::size_t cap, std::size_t lower_bound)
      : Error("support of more than " + std::to_string(cap) + " sequences (at least " +
              std::to_string(lower_bound) + ")"),
        cap_(cap),
        lower_bound_(lower_bound) {}
  std::size_t cap() const noexcept { return cap_; }
  std::size_t lower_bound() const noexcept { return lower_bound_; }

 private:
  std::size_t cap_;
  std::size_t lower_bound_;
};

/// Every output with positive probability for input x, in lexicographic
/// token order. Throws SupportCapExceeded beyond `cap` entries.
std::vector<SupportEntry> enumerate_support(const SyntheticTask& task,
                                            std::span<const Token> x,
                                            std::size_t cap = kDefaultSupportCap);

}  // namespace mabe
