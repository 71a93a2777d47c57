// Copyright 2026 The mabe-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "mabe/decoding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mabe {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Hypothesis {
  std::vector<Token> tokens;
  std::vector<double> step_log_probs;
  double score = 0.0;
  bool forced = false;
};

// Higher score first; equal scores in lexicographic token order.
bool better(const Hypothesis& a, const Hypothesis& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.tokens < b.tokens;
}

DecodeResult finish(Hypothesis h, Scorer scorer, std::size_t expanded) {
  DecodeResult r;
  r.tokens = std::move(h.tokens);
  r.step_log_probs = std::move(h.step_log_probs);
  r.total_log_prob = h.score;
  r.scorer = scorer;
  r.forced_eos = h.forced;
  r.candidates_expanded = expanded;
  for (std::size_t t = 0; t < r.step_log_probs.size(); ++t) {
    if (r.step_log_probs[t] == kNegInf) {
      r.zero_step = t;
      break;
    }
  }
  return r;
}

class MapSearch {
 public:
  MapSearch(const QModel& model, std::span<const Token> x, Scorer scorer, std::size_t cap,
            std::size_t budget)
      : model_(model), x_(x), scorer_(scorer), cap_(cap), budget_(budget) {}

  DecodeResult run() {
    Hypothesis root;
    expand(root);
    return result(false);
  }

 private:
  DecodeResult result(bool partial) {
    Hypothesis best = best_ ? *best_ : fallback();
    DecodeResult r = finish(std::move(best), scorer_, expanded_);
    r.partial = partial;
    return r;
  }

  // Every leaf scored -inf; the lexicographically smallest leaf is the
  // immediate EOS.
  Hypothesis fallback() {
    const QValues q = q_values(model_, {x_, {}});
    const TokenDistribution dist = score(q, scorer_);
    return Hypothesis{{kEos}, {dist.log_probs[kEos]}, dist.log_probs[kEos], cap_ == 0};
  }

  void expand(Hypothesis& h) {
    if (expanded_ >= budget_) throw NodeBudgetExceeded(budget_, result(true));
    ++expanded_;
    const QValues q = q_values(model_, {x_, h.tokens});
    const TokenDistribution dist = score(q, scorer_);
    const bool forced = h.tokens.size() >= cap_;
    const int last = forced ? 1 : static_cast<int>(dist.size());
    for (int a = 0; a < last; ++a) {
      const double s = h.score + dist.log_probs[a];
      const double bound = best_ ? best_->score : kNegInf;
      if (a == kEos) {
        if (s > bound) {
          Hypothesis leaf = h;
          leaf.tokens.push_back(kEos);
          leaf.step_log_probs.push_back(dist.log_probs[a]);
          leaf.score = s;
          leaf.forced = forced;
          best_ = std::move(leaf);
        }
        continue;
      }
      if (s <= bound) continue;
      h.tokens.push_back(a);
      h.step_log_probs.push_back(dist.log_probs[a]);
      const double saved = h.score;
      h.score = s;
      expand(h);
      h.score = saved;
      h.tokens.pop_back();
      h.step_log_probs.pop_back();
    }
  }

  const QModel& model_;
  std::span<const Token> x_;
  Scorer scorer_;
  std::size_t cap_;
  std::size_t budget_;
  std::size_t expanded_ = 0;
  std::optional<Hypothesis> best_;
};

}  // namespace

std::string scorer_tag(Scorer s) { return s == Scorer::kSoftmax ? "softmax" : "dual"; }

Scorer scorer_from_tag(const std::string& tag) {
  if (tag == "softmax") return Scorer::kSoftmax;
  if (tag == "dual") return Scorer::kDual;
  throw InvalidArgument("unknown scorer '" + tag + "' (expected softmax or dual)");
}

TokenDistribution score(const QValues& q, Scorer scorer) {
  return scorer == Scorer::kSoftmax ? softmax(q) : dual_distribution(q);
}

double DecodeResult::total_log10_prob() const { return total_log_prob / std::log(10.0); }

DecodeResult greedy_decode(const QModel& model, std::span<const Token> x, const LengthRule& rule,
                           Scorer scorer) {
  const std::size_t cap = rule.max_tokens(x.size());
  Hypothesis h;
  std::size_t expanded = 0;
  bool mismatch = false;
  while (true) {
    const QValues q = q_values(model, {x, h.tokens});
    ++expanded;
    const TokenDistribution dist = score(q, scorer);
    const bool forced = h.tokens.size() >= cap;
    const auto a = forced ? kEos : static_cast<Token>(argmax(q.values()));
    if (!forced && argmax(dist.probs) != static_cast<std::size_t>(a)) mismatch = true;
    h.tokens.push_back(a);
    h.step_log_probs.push_back(dist.log_probs[a]);
    h.score += dist.log_probs[a];
    if (a == kEos) {
      h.forced = forced;
      break;
    }
  }
  DecodeResult r = finish(std::move(h), scorer, expanded);
  r.scorer_argmax_mismatch = mismatch;
  return r;
}

DecodeResult sample_decode(const QModel& model, std::span<const Token> x, Scorer scorer,
                           double beta, CounterRng& rng, const LengthRule& rule) {
  if (!(beta >= 0.0)) {
    throw InvalidArgument("temperature must be >= 0, got " + std::to_string(beta));
  }
  const std::size_t cap = rule.max_tokens(x.size());
  Hypothesis h;
  std::size_t expanded = 0;
  while (true) {
    const QValues q = q_values(model, {x, h.tokens});
    ++expanded;
    const TokenDistribution dist = score(q, scorer);
    const bool forced = h.tokens.size() >= cap;
    Token a = kEos;
    if (!forced) {
      const TokenDistribution tempered = scorer == Scorer::kSoftmax
                                             ? temperature_rescale(q, beta)
                                             : power_rescale(dist, beta);
      a = static_cast<Token>(rng.categorical(tempered.probs));
    }
    h.tokens.push_back(a);
    h.step_log_probs.push_back(dist.log_probs[a]);
    h.score += dist.log_probs[a];
    if (a == kEos) {
      h.forced = forced;
      break;
    }
  }
  return finish(std::move(h), scorer, expanded);
}

DecodeResult beam_search(const QModel& model, std::span<const Token> x, Scorer scorer,
                         std::size_t beam_size, const LengthRule& rule) {
  if (beam_size == 0) throw InvalidArgument("beam size must be >= 1");
  const std::size_t cap = rule.max_tokens(x.size());
  std::vector<Hypothesis> live(1);
  std::vector<Hypothesis> pool;
  std::size_t expanded = 0;

  while (!live.empty()) {
    if (!pool.empty()) {
      const double pool_best =
          std::min_element(pool.begin(), pool.end(), better)->score;
      const bool done = std::all_of(live.begin(), live.end(),
                                    [&](const Hypothesis& h) { return pool_best > h.score; });
      if (done) break;
    }
    std::vector<Hypothesis> candidates;
    for (const Hypothesis& h : live) {
      const QValues q = q_values(model, {x, h.tokens});
      ++expanded;
      const TokenDistribution dist = score(q, scorer);
      const bool forced = h.tokens.size() >= cap;
      const int last = forced ? 1 : static_cast<int>(dist.size());
      for (int a = 0; a < last; ++a) {
        Hypothesis c = h;
        c.tokens.push_back(a);
        c.step_log_probs.push_back(dist.log_probs[a]);
        c.score += dist.log_probs[a];
        c.forced = forced;
        candidates.push_back(std::move(c));
      }
    }
    const std::size_t keep = std::min(beam_size, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<long>(keep),
                      candidates.end(), better);
    live.clear();
    for (std::size_t i = 0; i < keep; ++i) {
      if (candidates[i].tokens.back() == kEos) {
        pool.push_back(std::move(candidates[i]));
      } else {
        live.push_back(std::move(candidates[i]));
      }
    }
  }
  auto best = std::min_element(pool.begin(), pool.end(), better);
  return finish(std::move(*best), scorer, expanded);
}

DecodeResult exact_map(const QModel& model, std::span<const Token> x, Scorer scorer,
                       const LengthRule& rule, std::size_t node_budget) {
  if (node_budget == 0) throw InvalidArgument("node budget must be >= 1");
  return MapSearch(model, x, scorer, rule.max_tokens(x.size()), node_budget).run();
}

SequenceScore sequence_log_prob(const QModel& model, std::span<const Token> x,
                                std::span<const Token> y, Scorer scorer) {
  if (y.empty() || y.back() != kEos) throw InvalidArgument("output must end with EOS");
  SequenceScore out;
  for (std::size_t t = 0; t < y.size(); ++t) {
    if (t + 1 < y.size() && y[t] == kEos) {
      throw InvalidArgument("EOS may only appear at the end of an output");
    }
    const QValues q = q_values(model, {x, y.first(t)});
    if (y[t] < 0 || static_cast<std::size_t>(y[t]) >= q.size()) {
      throw InvalidArgument("output token " + std::to_string(y[t]) + " out of range");
    }
    const double lp = score(q, scorer).log_probs[y[t]];
    if (lp == kNegInf && !out.zero_step) out.zero_step = t;
    out.log_prob += lp;
  }
  return out;
}

}  // namespace mabe
