// Copyright 2026 The mabe-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "mabe/tasks.hpp"

#include <cmath>
#include <map>
#include <numeric>

namespace mabe {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidArgument(what);
}

void normalize(std::vector<double>& w, const std::string& what, double tol) {
  double s = 0.0;
  for (double v : w) {
    require(std::isfinite(v) && v >= 0.0, what + ": weights must be finite and >= 0");
    s += v;
  }
  require(s > 0.0, what + ": weights sum to zero");
  if (tol > 0.0) {
    require(std::abs(s - 1.0) <= tol, what + ": probabilities sum to " + std::to_string(s));
  }
  for (double& v : w) v /= s;
}

std::vector<double> noisy_copy_step(const NoisyCopySpec& s, Token target) {
  const int d = s.vocab_size;
  std::vector<double> p(d, 0.0);
  const double spread = s.eps / static_cast<double>(d - 1);
  for (int a = 1; a < d; ++a) p[a] = spread;
  p[target] += 1.0 - s.eps;
  return p;
}

std::vector<double> uniform_non_eos(int d) {
  std::vector<double> p(d, 1.0 / static_cast<double>(d - 1));
  p[kEos] = 0.0;
  return p;
}

std::vector<double> one_hot_eos(int d) {
  std::vector<double> p(d, 0.0);
  p[kEos] = 1.0;
  return p;
}

void check_input(const SyntheticTask& task, std::span<const Token> x) {
  if (std::holds_alternative<BanditSpec>(task.kind())) {
    require(x.empty(), "bandit inputs are empty");
    return;
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    require(x[i] > kEos && x[i] < task.vocab_size(),
            "input token " + std::to_string(x[i]) + " at position " + std::to_string(i) +
                " is not a non-EOS token of the task");
  }
}

// Probability of keeping exactly m phrases out of n.
double keep_probability(const SynonymSpec& s, std::size_t m, std::size_t n) {
  if (m == n) return 1.0 - s.truncation_prob;
  return s.truncation_prob / static_cast<double>(n);
}

std::map<std::vector<Token>, double> synonym_support(const SynonymSpec& s, const LengthRule& rule,
                                                     std::span<const Token> x, std::size_t cap) {
  std::map<std::vector<Token>, double> out;
  const std::size_t n = x.size();
  const std::size_t max_tokens = rule.max_tokens(n);
  std::size_t combos_seen = 0;
  for (std::size_t m = 0; m <= n; ++m) {
    const double pm = keep_probability(s, m, n);
    if (pm <= 0.0) continue;
    std::vector<std::size_t> choice(m, 0);
    while (true) {
      double p = pm;
      std::vector<Token> y;
      for (std::size_t i = 0; i < m; ++i) {
        const Phrase& ph = s.table[x[i] - 1][choice[i]];
        p *= ph.weight;
        y.insert(y.end(), ph.tokens.begin(), ph.tokens.end());
      }
      if (y.size() > max_tokens) y.resize(max_tokens);
      y.push_back(kEos);
      if (p > 0.0) {
        out[std::move(y)] += p;
        if (out.size() > cap) throw SupportCapExceeded(cap, out.size());
      }
      if (++combos_seen > 64 * cap) throw SupportCapExceeded(cap, out.size());
      // Odometer increment over the phrase choices.
      std::size_t i = 0;
      for (; i < m; ++i) {
        if (++choice[i] < s.table[x[i] - 1].size()) break;
        choice[i] = 0;
      }
      if (i == m) break;
    }
  }
  return out;
}

}  // namespace

SyntheticTask::SyntheticTask(Kind kind) : kind_(std::move(kind)) {
  std::visit(
      Overloaded{
          [&](BanditSpec& s) {
            require(s.vocab_size >= 2, "bandit vocab_size must be >= 2");
            require(s.probs.size() == static_cast<std::size_t>(s.vocab_size - 1),
                    "bandit probs must have vocab_size - 1 = " +
                        std::to_string(s.vocab_size - 1) + " entries, got " +
                        std::to_string(s.probs.size()));
            normalize(s.probs, "bandit probs", 1e-9);
            vocab_size_ = s.vocab_size;
            rule_ = LengthRule{2, 1};
          },
          [&](NoisyCopySpec& s) {
            require(s.vocab_size >= 2, "noisy_copy vocab_size must be >= 2");
            require(s.length >= 1, "noisy_copy length must be >= 1");
            require(s.eps >= 0.0 && s.eps < 1.0, "noisy_copy eps must lie in [0, 1)");
            vocab_size_ = s.vocab_size;
            rule_ = LengthRule{2, 0};
          },
          [&](SynonymSpec& s) {
            require(s.vocab_size >= 2, "synonym vocab_size must be >= 2");
            require(s.input_length >= 1, "synonym input_length must be >= 1");
            require(s.truncation_prob >= 0.0 && s.truncation_prob < 1.0,
                    "synonym truncation_prob must lie in [0, 1)");
            require(s.table.size() == static_cast<std::size_t>(s.vocab_size - 1),
                    "synonym table needs one row per non-EOS token (" +
                        std::to_string(s.vocab_size - 1) + ")");
            for (std::size_t r = 0; r < s.table.size(); ++r) {
              auto& row = s.table[r];
              const std::string where = "synonym table row " + std::to_string(r + 1);
              require(!row.empty(), where + " is empty");
              std::vector<double> w;
              for (const Phrase& ph : row) {
                require(!ph.tokens.empty() && ph.tokens.size() <= 3,
                        where + ": phrases must have 1 to 3 tokens");
                for (Token t : ph.tokens) {
                  require(t > kEos && t < s.vocab_size, where + ": phrase token out of range");
                }
                w.push_back(ph.weight);
              }
              normalize(w, where, 0.0);
              for (std::size_t i = 0; i < row.size(); ++i) row[i].weight = w[i];
            }
            vocab_size_ = s.vocab_size;
            rule_ = LengthRule{2, 0};
          }},
      kind_);
}

std::string SyntheticTask::tag() const {
  return std::visit(Overloaded{[](const BanditSpec&) { return std::string("bandit"); },
                               [](const NoisyCopySpec&) { return std::string("noisy_copy"); },
                               [](const SynonymSpec&) { return std::string("synonym"); }},
                    kind_);
}

std::size_t SyntheticTask::input_length() const noexcept {
  return std::visit(
      Overloaded{[](const BanditSpec&) { return std::size_t{0}; },
                 [](const NoisyCopySpec& s) { return static_cast<std::size_t>(s.length); },
                 [](const SynonymSpec& s) { return static_cast<std::size_t>(s.input_length); }},
      kind_);
}

SynonymSpec make_synonym_spec(int vocab_size, int input_length, int phrases_per_token,
                              int max_phrase_len, double truncation_prob, std::uint64_t seed) {
  require(vocab_size >= 2, "synonym vocab_size must be >= 2");
  require(phrases_per_token >= 1, "phrases_per_token must be >= 1");
  require(max_phrase_len >= 1 && max_phrase_len <= 3, "max_phrase_len must lie in [1, 3]");
  CounterRng rng(seed, 0);
  SynonymSpec s;
  s.vocab_size = vocab_size;
  s.input_length = input_length;
  s.truncation_prob = truncation_prob;
  const auto non_eos = static_cast<std::uint64_t>(vocab_size - 1);
  for (int tok = 1; tok < vocab_size; ++tok) {
    std::vector<Phrase> row;
    for (int p = 0; p < phrases_per_token; ++p) {
      Phrase ph;
      const auto len = 1 + rng.below(static_cast<std::uint64_t>(max_phrase_len));
      for (std::uint64_t i = 0; i < len; ++i) {
        ph.tokens.push_back(static_cast<Token>(1 + rng.below(non_eos)));
      }
      ph.weight = rng.uniform(0.2, 1.0);
      row.push_back(std::move(ph));
    }
    s.table.push_back(std::move(row));
  }
  return s;
}

std::vector<Token> sample_input(const SyntheticTask& task, CounterRng& rng) {
  std::vector<Token> x(task.input_length());
  const auto non_eos = static_cast<std::uint64_t>(task.vocab_size() - 1);
  for (Token& t : x) t = static_cast<Token>(1 + rng.below(non_eos));
  return x;
}

LabeledPair sample_pair(const SyntheticTask& task, CounterRng& rng) {
  LabeledPair pair;
  pair.x = sample_input(task, rng);
  std::visit(Overloaded{
                 [&](const BanditSpec& s) {
                   pair.y.push_back(static_cast<Token>(1 + rng.categorical(s.probs)));
                 },
                 [&](const NoisyCopySpec& s) {
                   const auto non_eos = static_cast<std::uint64_t>(s.vocab_size - 1);
                   for (Token xt : pair.x) {
                     if (rng.uniform() < s.eps) {
                       pair.y.push_back(static_cast<Token>(1 + rng.below(non_eos)));
                     } else {
                       pair.y.push_back(xt);
                     }
                   }
                 },
                 [&](const SynonymSpec& s) {
                   const std::size_t n = pair.x.size();
                   std::size_t m = n;
                   if (rng.uniform() < s.truncation_prob) m = rng.below(n);
                   for (std::size_t i = 0; i < m; ++i) {
                     const auto& row = s.table[pair.x[i] - 1];
                     std::vector<double> w;
                     for (const Phrase& ph : row) w.push_back(ph.weight);
                     const Phrase& ph = row[rng.categorical(w)];
                     pair.y.insert(pair.y.end(), ph.tokens.begin(), ph.tokens.end());
                   }
                   const std::size_t cap = task.length_rule().max_tokens(n);
                   if (pair.y.size() > cap) pair.y.resize(cap);
                 }},
             task.kind());
  pair.y.push_back(kEos);
  return pair;
}

OracleStep true_token_distribution(const SyntheticTask& task, const DecisionContext& ctx) {
  check_input(task, ctx.input);
  const int d = task.vocab_size();
  const std::size_t t = ctx.prefix.size();
  for (Token tok : ctx.prefix) {
    require(tok > kEos && tok < d, "prefix token out of range");
  }
  if (t >= task.length_rule().max_tokens(ctx.input.size())) {
    return {TokenDistribution::from_probs(one_hot_eos(d)), false};
  }
  return std::visit(
      Overloaded{
          [&](const BanditSpec& s) -> OracleStep {
            std::vector<double> p(d, 0.0);
            for (int a = 1; a < d; ++a) p[a] = s.probs[a - 1];
            return {TokenDistribution::from_probs(std::move(p)), false};
          },
          [&](const NoisyCopySpec& s) -> OracleStep {
            const std::size_t len = ctx.input.size();
            bool reachable = t <= len;
            if (reachable && s.eps == 0.0) {
              for (std::size_t i = 0; i < t; ++i) reachable = reachable && ctx.prefix[i] == ctx.input[i];
            }
            if (!reachable) return {TokenDistribution::from_probs(uniform_non_eos(d)), true};
            if (t == len) return {TokenDistribution::from_probs(one_hot_eos(d)), false};
            return {TokenDistribution::from_probs(noisy_copy_step(s, ctx.input[t])), false};
          },
          [&](const SynonymSpec& s) -> OracleStep {
            const auto support =
                synonym_support(s, task.length_rule(), ctx.input, kDefaultSupportCap);
            std::vector<double> next(d, 0.0);
            double mass = 0.0;
            for (const auto& [y, p] : support) {
              if (y.size() <= t) continue;
              if (!std::equal(ctx.prefix.begin(), ctx.prefix.end(), y.begin())) continue;
              next[y[t]] += p;
              mass += p;
            }
            if (mass <= 0.0) return {TokenDistribution::from_probs(uniform_non_eos(d)), true};
            for (double& v : next) v /= mass;
            return {TokenDistribution::from_probs(std::move(next)), false};
          }},
      task.kind());
}

std::vector<SupportEntry> enumerate_support(const SyntheticTask& task, std::span<const Token> x,
                                            std::size_t cap) {
  check_input(task, x);
  std::vector<SupportEntry> out;
  std::visit(
      Overloaded{
          [&](const BanditSpec& s) {
            for (std::size_t i = 0; i < s.probs.size(); ++i) {
              if (s.probs[i] > 0.0) out.push_back({{static_cast<Token>(i + 1), kEos}, s.probs[i]});
            }
            if (out.size() > cap) throw SupportCapExceeded(cap, out.size());
          },
          [&](const NoisyCopySpec& s) {
            const std::size_t len = x.size();
            if (s.eps == 0.0) {
              std::vector<Token> y(x.begin(), x.end());
              y.push_back(kEos);
              out.push_back({std::move(y), 1.0});
              return;
            }
            const auto base = static_cast<std::size_t>(s.vocab_size - 1);
            std::size_t count = 1;
            for (std::size_t i = 0; i < len; ++i) {
              if (count > cap / base + 1) throw SupportCapExceeded(cap, count * base);
              count *= base;
            }
            if (count > cap) throw SupportCapExceeded(cap, count);
            out.reserve(count);
            std::vector<Token> y(len, 1);
            for (std::size_t n = 0; n < count; ++n) {
              double p = 1.0;
              for (std::size_t i = 0; i < len; ++i) p *= noisy_copy_step(s, x[i])[y[i]];
              std::vector<Token> full = y;
              full.push_back(kEos);
              out.push_back({std::move(full), p});
              for (std::size_t i = len; i-- > 0;) {
                if (++y[i] < s.vocab_size) break;
                y[i] = 1;
              }
            }
          },
          [&](const SynonymSpec& s) {
            for (auto& [y, p] : synonym_support(s, task.length_rule(), x, cap)) {
              out.push_back({y, p});
            }
          }},
      task.kind());
  return out;
}

}  // namespace mabe
