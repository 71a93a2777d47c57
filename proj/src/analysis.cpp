// Copyright 2026 The mabe-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "mabe/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "mabe/parallel.hpp"
#include "mabe/training.hpp"

namespace mabe {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kUtilityTol = 1e-12;
constexpr std::size_t kMaxCandidates = 4096;

double inf_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

std::vector<Token> strip_eos(std::span<const Token> y) {
  std::vector<Token> out;
  for (Token t : y) {
    if (t != kEos) out.push_back(t);
  }
  return out;
}

std::size_t edit_distance(std::span<const Token> a, std::span<const Token> b) {
  std::vector<std::size_t> prev(b.size() + 1);
  std::vector<std::size_t> cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::string show(std::span<const Token> y) { return fmt::format("({})", fmt::join(y, " ")); }

// Support members plus EOS-only, truncations and single-token substitutions of
// the most probable member, bounded by kMaxCandidates.
std::vector<std::vector<Token>> candidate_outputs(std::span<const SupportEntry> support,
                                                  int vocab_size) {
  std::set<std::vector<Token>> seen;
  std::vector<std::vector<Token>> out;
  auto add = [&](std::vector<Token> y) {
    if (out.size() < kMaxCandidates && seen.insert(y).second) out.push_back(std::move(y));
  };
  for (const SupportEntry& e : support) add(e.y);
  add({kEos});
  const std::vector<Token>& best = support[support_argmax(support)].y;
  for (std::size_t len = 1; len + 1 < best.size(); ++len) {
    std::vector<Token> t(best.begin(), best.begin() + static_cast<long>(len));
    t.push_back(kEos);
    add(std::move(t));
  }
  for (std::size_t pos = 0; pos + 1 < best.size(); ++pos) {
    for (Token a = 1; a < vocab_size; ++a) {
      std::vector<Token> s = best;
      s[pos] = a;
      add(std::move(s));
    }
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

GradientIdentityReport verify_gradient_identity(const QModel& model,
                                                std::span<const LabeledPair> batch, double h) {
  if (!(h > 0.0)) throw InvalidArgument("verify_gradient_identity: h must be > 0");
  if (batch.empty()) throw InvalidArgument("verify_gradient_identity: empty batch");
  QModel probe = model;
  GradientIdentityReport r;
  r.logp_grad = finite_difference_gradient(
      probe, [&](const QModel& m) { return eval_log_likelihood(m, batch).j_seq; }, h);
  r.jmabe_grad =
      finite_difference_gradient(probe, [&](const QModel& m) { return eval_j_mabe(m, batch); }, h);

  const double inv_n = 1.0 / static_cast<double>(batch.size());
  auto backprop = [&](const CoefficientFn& fn) {
    GradientBuffer buf = batch_gradient_serial(model, batch, fn).sum;
    buf.scale(inv_n);
    return buf.grads;
  };
  r.cov_grad = backprop([](const QValues& q, Token) { return cov_coefficients(q); });
  const std::vector<double> mle = backprop(mle_coefficients);
  const std::vector<double> mabe0 =
      backprop([](const QValues& q, Token y) { return mabe_coefficients(q, y, 0.0); });

  for (std::size_t j = 0; j < r.cov_grad.size(); ++j) {
    if (!std::isfinite(r.cov_grad[j]) || !std::isfinite(mle[j]) || !std::isfinite(mabe0[j])) {
      throw NumericalError("verify_gradient_identity: non-finite gradient at coordinate " +
                           std::to_string(j));
    }
  }

  const double fd_scale = std::max(inf_norm(r.logp_grad), 1e-12);
  const double an_scale = std::max(inf_norm(mle), 1e-12);
  double worst = -1.0;
  double worst_analytic = 0.0;
  for (std::size_t j = 0; j < r.cov_grad.size(); ++j) {
    const double fd = std::abs(r.logp_grad[j] - r.jmabe_grad[j] - r.cov_grad[j]);
    if (fd > worst) {
      worst = fd;
      r.worst_coordinate = j;
    }
    worst_analytic = std::max(worst_analytic, std::abs(mle[j] - mabe0[j] - r.cov_grad[j]));
  }
  r.max_relative_residual = worst / fd_scale;
  r.analytic_relative_residual = worst_analytic / an_scale;
  return r;
}

// ---------------------------------------------------------------------------

double fixed_point_objective(std::span<const double> p_true, std::span<const double> q) {
  const QValues qv(std::vector<double>(q.begin(), q.end()));
  double target = 0.0;
  for (std::size_t a = 0; a < q.size(); ++a) target += p_true[a] * q[a];
  return target - expected_q(softmax(qv), qv);
}

std::vector<double> fixed_point_gradient(std::span<const double> p_true,
                                         std::span<const double> q) {
  const QValues qv(std::vector<double>(q.begin(), q.end()));
  const TokenDistribution p = softmax(qv);
  const double eq = expected_q(p, qv);
  std::vector<double> g(q.size());
  for (std::size_t j = 0; j < q.size(); ++j) g[j] = p_true[j] - p.probs[j] * (1.0 + q[j] - eq);
  return g;
}

FixedPointReport tabular_fixed_point(std::span<const double> p_true,
                                     const FixedPointConfig& config) {
  const std::size_t d = p_true.size();
  if (d < 2 || d > 64) throw InvalidArgument("tabular_fixed_point: need 2 <= d <= 64");
  double total = 0.0;
  for (double p : p_true) {
    if (!(p >= 0.0)) throw InvalidArgument("tabular_fixed_point: probabilities must be >= 0");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw InvalidArgument("tabular_fixed_point: probabilities must sum to 1");
  }

  FixedPointReport r;
  r.p_true.assign(p_true.begin(), p_true.end());
  std::vector<double> q(d, 0.0);
  for (r.steps = 0; r.steps < config.max_steps; ++r.steps) {
    const std::vector<double> g = fixed_point_gradient(p_true, q);
    r.max_gradient = inf_norm(g);
    if (r.max_gradient < config.tol) {
      r.converged = true;
      break;
    }
    for (std::size_t j = 0; j < d; ++j) q[j] += config.lr * g[j];
  }
  if (!r.converged) r.max_gradient = inf_norm(fixed_point_gradient(p_true, q));

  const QValues qv(q);
  const TokenDistribution p = softmax(qv);
  const double eq = expected_q(p, qv);
  r.q_star = q;
  r.p_star = p.probs;
  r.dual = dual_distribution(qv).probs;
  r.objective = fixed_point_objective(p_true, q);
  r.residuals.resize(d);
  double max_in = -kInf;
  double max_out = -kInf;
  double min_out = kInf;
  for (std::size_t a = 0; a < d; ++a) {
    r.residuals[a] = std::abs(p.probs[a] * (1.0 + q[a] - eq) - p_true[a]);
    if (p_true[a] > 0.0) {
      max_in = std::max(max_in, q[a]);
    } else {
      max_out = std::max(max_out, q[a]);
      min_out = std::min(min_out, q[a]);
    }
  }
  if (max_out > -kInf && max_in > -kInf) {
    r.margin = max_in - max_out;
    r.undesired_spread = max_out - min_out;
  }
  return r;
}

std::vector<double> random_fixed_point_target(CounterRng& rng, int max_d) {
  if (max_d < 2) throw InvalidArgument("random_fixed_point_target: max_d must be >= 2");
  const auto d = 2 + static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(max_d - 1)));
  const auto support = 1 + static_cast<std::size_t>(rng.below(d - 1));
  std::vector<std::size_t> order(d);
  for (std::size_t i = 0; i < d; ++i) order[i] = i;
  for (std::size_t i = d - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
  std::vector<double> p(d, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < support; ++i) {
    p[order[i]] = rng.uniform(0.05, 1.0);
    total += p[order[i]];
  }
  for (double& v : p) v /= total;
  return p;
}

LandscapeReport j_landscape(std::span<const double> p_true, int gauge_token,
                            const LandscapeGrid& grid) {
  if (p_true.size() != 2) throw InvalidArgument("j_landscape: the cross-section needs d = 2");
  if (gauge_token != 0 && gauge_token != 1) {
    throw InvalidArgument("j_landscape: gauge token must be 0 or 1");
  }
  if (!(grid.step > 0.0) || !(grid.hi > grid.lo)) {
    throw InvalidArgument("j_landscape: grid needs lo < hi and step > 0");
  }
  const int free_token = 1 - gauge_token;
  auto at = [&](double v) {
    std::vector<double> q(2, 0.0);
    q[static_cast<std::size_t>(free_token)] = v;
    return q;
  };
  auto slope = [&](double v) {
    return fixed_point_gradient(p_true, at(v))[static_cast<std::size_t>(free_token)];
  };

  LandscapeReport r;
  r.gauge_token = gauge_token;
  const auto n = static_cast<std::size_t>(std::floor((grid.hi - grid.lo) / grid.step + 1e-9)) + 1;
  std::vector<double> slopes;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = grid.lo + static_cast<double>(i) * grid.step;
    r.q_free.push_back(v);
    r.objective.push_back(fixed_point_objective(p_true, at(v)));
    slopes.push_back(slope(v));
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (!(slopes[i] > 0.0 && slopes[i + 1] <= 0.0)) continue;
    double lo = r.q_free[i];
    double hi = r.q_free[i + 1];
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
      const double mid = 0.5 * (lo + hi);
      (slope(mid) > 0.0 ? lo : hi) = mid;
    }
    const double v = 0.5 * (lo + hi);
    r.maxima.push_back({v, fixed_point_objective(p_true, at(v))});
  }
  return r;
}

// ---------------------------------------------------------------------------

std::string similarity_tag(Similarity s) {
  switch (s) {
    case Similarity::kExactMatch: return "exact_match";
    case Similarity::kTokenOverlapF1: return "token_f1";
    case Similarity::kNegNormalizedEditDistance: return "neg_edit_distance";
  }
  return "unknown";
}

Similarity similarity_from_tag(const std::string& tag) {
  if (tag == "exact_match") return Similarity::kExactMatch;
  if (tag == "token_f1") return Similarity::kTokenOverlapF1;
  if (tag == "neg_edit_distance") return Similarity::kNegNormalizedEditDistance;
  throw InvalidArgument("unknown similarity '" + tag +
                        "' (expected exact_match, token_f1 or neg_edit_distance)");
}

std::string aggregation_tag(Aggregation a) {
  return a == Aggregation::kAverage ? "average" : "max_over_support";
}

Aggregation aggregation_from_tag(const std::string& tag) {
  if (tag == "average") return Aggregation::kAverage;
  if (tag == "max_over_support") return Aggregation::kMaxOverSupport;
  throw InvalidArgument("unknown aggregation '" + tag + "' (expected average or max_over_support)");
}

double similarity(Similarity s, std::span<const Token> a, std::span<const Token> y) {
  const std::vector<Token> ta = strip_eos(a);
  const std::vector<Token> ty = strip_eos(y);
  switch (s) {
    case Similarity::kExactMatch:
      return ta == ty ? 1.0 : 0.0;
    case Similarity::kTokenOverlapF1: {
      if (ta.empty() && ty.empty()) return 1.0;
      if (ta.empty() || ty.empty()) return 0.0;
      std::map<Token, int> counts;
      for (Token t : ty) ++counts[t];
      int common = 0;
      for (Token t : ta) {
        if (counts[t] > 0) {
          --counts[t];
          ++common;
        }
      }
      if (common == 0) return 0.0;
      const double precision = static_cast<double>(common) / static_cast<double>(ta.size());
      const double recall = static_cast<double>(common) / static_cast<double>(ty.size());
      return 2.0 * precision * recall / (precision + recall);
    }
    case Similarity::kNegNormalizedEditDistance: {
      const std::size_t len = std::max(ta.size(), ty.size());
      if (len == 0) return 0.0;
      return -static_cast<double>(edit_distance(ta, ty)) / static_cast<double>(len);
    }
  }
  return 0.0;
}

double utility(const UtilitySpec& spec, std::span<const Token> a,
               std::span<const SupportEntry> support) {
  if (spec.aggregation == Aggregation::kAverage) {
    double u = 0.0;
    for (const SupportEntry& e : support) u += e.prob * similarity(spec.delta, a, e.y);
    return u;
  }
  double u = -kInf;
  for (const SupportEntry& e : support) u = std::max(u, similarity(spec.delta, a, e.y));
  return u;
}

std::size_t support_argmax(std::span<const SupportEntry> support) {
  if (support.empty()) throw InvalidArgument("support_argmax: empty support");
  std::size_t best = 0;
  for (std::size_t i = 1; i < support.size(); ++i) {
    if (support[i].prob > support[best].prob) best = i;
  }
  return best;
}

OracleReport map_optimality_check(const SyntheticTask& task, const UtilitySpec& spec,
                                  std::size_t n, std::uint64_t seed) {
  OracleReport r;
  r.check = "map_optimality/" + similarity_tag(spec.delta) + "/" +
            aggregation_tag(spec.aggregation);
  for (std::size_t i = 0; i < n; ++i) {
    CounterRng rng(seed, i);
    const std::vector<Token> x = sample_input(task, rng);
    std::vector<SupportEntry> support;
    try {
      support = enumerate_support(task, x);
    } catch (const SupportCapExceeded& e) {
      r.skipped.push_back(fmt::format("instance {} x={}: {}", i, show(x), e.what()));
      continue;
    }
    const bool deterministic = support.size() == 1;
    const bool case1 =
        spec.delta == Similarity::kExactMatch && spec.aggregation == Aggregation::kAverage;
    const bool case3 = spec.aggregation == Aggregation::kMaxOverSupport;
    if (!case1 && !deterministic && !case3) {
      r.skipped.push_back(fmt::format(
          "instance {} x={}: no optimality guarantee for a stochastic task under this utility", i,
          show(x)));
      continue;
    }
    ++r.instances;
    const auto candidates = candidate_outputs(support, task.vocab_size());
    double best_u = -kInf;
    std::vector<double> u(candidates.size());
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      u[c] = utility(spec, candidates[c], support);
      best_u = std::max(best_u, u[c]);
    }
    const std::vector<Token>& map = support[support_argmax(support)].y;
    const double map_u = utility(spec, map, support);
    std::string failure;
    if (map_u < best_u - kUtilityTol) {
      const auto it = std::max_element(u.begin(), u.end());
      failure = fmt::format("argmax P_true {} has utility {:.17g} < {:.17g} attained by {}",
                            show(map), map_u, best_u,
                            show(candidates[static_cast<std::size_t>(it - u.begin())]));
    } else if (case3) {
      for (const SupportEntry& e : support) {
        const double ue = utility(spec, e.y, support);
        if (ue < best_u - kUtilityTol) {
          failure = fmt::format("support member {} has utility {:.17g} < max {:.17g}", show(e.y),
                                ue, best_u);
          break;
        }
      }
    }
    if (failure.empty()) {
      ++r.passed;
    } else {
      r.counterexamples.push_back(fmt::format("instance {} x={}: {}", i, show(x), failure));
    }
  }
  return r;
}

OracleReport sampling_soundness_check(const SyntheticTask& task, const UtilitySpec& spec,
                                      std::size_t n, std::uint64_t seed) {
  static constexpr double kAlphas[] = {0.0, 0.25, 0.5, 0.75, 1.0};
  OracleReport r;
  r.check = "sampling_soundness/" + similarity_tag(spec.delta) + "/" +
            aggregation_tag(spec.aggregation);
  for (std::size_t i = 0; i < n; ++i) {
    CounterRng rng(seed, i);
    const std::vector<Token> x = sample_input(task, rng);
    std::vector<SupportEntry> support;
    try {
      support = enumerate_support(task, x);
    } catch (const SupportCapExceeded& e) {
      r.skipped.push_back(fmt::format("instance {} x={}: {}", i, show(x), e.what()));
      continue;
    }
    ++r.instances;
    const std::size_t m = support.size();
    std::vector<double> u(m);
    for (std::size_t a = 0; a < m; ++a) u[a] = utility(spec, support[a].y, support);

    // E_{A ~ P_true} U(A), and the Y-policy's expected similarity against an
    // independent copy of Y summed in the opposite order.
    double policy = 0.0;
    for (std::size_t a = 0; a < m; ++a) policy += support[a].prob * u[a];
    double y_policy = 0.0;
    if (spec.aggregation == Aggregation::kAverage) {
      for (const SupportEntry& y : support) {
        for (const SupportEntry& a : support) {
          y_policy += y.prob * a.prob * similarity(spec.delta, a.y, y.y);
        }
      }
    } else {
      y_policy = policy;
    }
    std::string failure;
    if (std::abs(policy - y_policy) > 1e-12) {
      failure = fmt::format("identity violated: {:.17g} vs {:.17g}", policy, y_policy);
    }

    double prev_gap = -kInf;
    for (double alpha : kAlphas) {
      double mixed = 0.0;
      for (std::size_t a = 0; a < m; ++a) {
        const double pa = (1.0 - alpha) * support[a].prob + alpha / static_cast<double>(m);
        mixed += pa * u[a];
      }
      const double gap = policy - mixed;
      if (failure.empty() && gap < prev_gap - kUtilityTol) {
        failure = fmt::format("utility gap decreased to {:.17g} at alpha={}", gap, alpha);
      }
      prev_gap = std::max(prev_gap, gap);
    }

    if (failure.empty() && m == 1) {
      const double one_hot = u[support_argmax(support)];
      if (std::abs(one_hot - policy) > kUtilityTol) {
        failure = fmt::format("one-hot policy utility {:.17g} differs from {:.17g}", one_hot,
                              policy);
      }
    }
    if (failure.empty()) {
      ++r.passed;
    } else {
      r.counterexamples.push_back(fmt::format("instance {} x={}: {}", i, show(x), failure));
    }
  }
  return r;
}

// ---------------------------------------------------------------------------

std::string rule_tag(RuleKind k) {
  switch (k) {
    case RuleKind::kGreedy: return "greedy";
    case RuleKind::kSample: return "sample";
    case RuleKind::kBeam: return "beam";
    case RuleKind::kMap: return "map";
  }
  return "unknown";
}

RuleKind rule_from_tag(const std::string& tag) {
  if (tag == "greedy") return RuleKind::kGreedy;
  if (tag == "sample") return RuleKind::kSample;
  if (tag == "beam") return RuleKind::kBeam;
  if (tag == "map") return RuleKind::kMap;
  throw InvalidArgument("unknown rule '" + tag + "' (expected greedy, sample, beam or map)");
}

std::string DecisionRule::label() const {
  switch (kind) {
    case RuleKind::kSample: return fmt::format("sample(beta={})", beta);
    case RuleKind::kBeam: return fmt::format("beam({})", beam);
    default: return rule_tag(kind);
  }
}

DecodeResult run_rule(const QModel& model, std::span<const Token> x, const DecisionRule& rule,
                      Scorer scorer, const LengthRule& length, CounterRng& rng) {
  switch (rule.kind) {
    case RuleKind::kGreedy: return greedy_decode(model, x, length, scorer);
    case RuleKind::kSample: return sample_decode(model, x, scorer, rule.beta, rng, length);
    case RuleKind::kBeam: return beam_search(model, x, scorer, rule.beam, length);
    case RuleKind::kMap: return exact_map(model, x, scorer, length);
  }
  throw InvalidArgument("run_rule: unknown rule");
}

double sequence_kl(const QModel& model, std::span<const Token> x,
                   std::span<const SupportEntry> support, Scorer scorer,
                   std::size_t* zero_support) {
  double kl = 0.0;
  std::size_t zeros = 0;
  for (const SupportEntry& e : support) {
    if (e.prob <= 0.0) continue;
    const double lm = sequence_log_prob(model, x, e.y, scorer).log_prob;
    if (lm == -kInf) {
      ++zeros;
      continue;
    }
    kl += e.prob * (std::log(e.prob) - lm);
  }
  if (zero_support) *zero_support = zeros;
  return zeros > 0 ? kInf : std::max(kl, 0.0);
}

namespace {

struct InstanceStats {
  double exact = 0.0;
  double util = 0.0;
  double own = 0.0;
  bool own_zero = false;
  double ref = 0.0;
  bool ref_zero = false;
  double empty = 0.0;
  bool empty_zero = false;
  double kl = 0.0;
  std::vector<double> conf;
  std::vector<double> acc;
};

constexpr int kEceBins = 10;

}  // namespace

EvalTable evaluate_decoders(const QModel& model, const SyntheticTask& task,
                            const EvalSuite& suite, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw InvalidArgument("evaluate_decoders: need at least one instance");
  if (model.vocab_size() != task.vocab_size()) {
    throw InvalidArgument("evaluate_decoders: model and task vocabularies differ");
  }
  const LengthRule length = task.length_rule();
  const double ln10 = std::log(10.0);
  EvalTable table;
  std::uint64_t row_id = 0;
  for (Scorer scorer : suite.scorers) {
    for (const DecisionRule& rule : suite.rules) {
      ++row_id;
      const auto stats = parallel_map(n, [&](std::size_t i) {
        CounterRng inst(seed, i);
        const std::vector<Token> x = sample_input(task, inst);
        const std::vector<SupportEntry> support = enumerate_support(task, x);
        std::vector<double> probs;
        for (const SupportEntry& e : support) probs.push_back(e.prob);
        const std::vector<Token>& reference = support[inst.categorical(probs)].y;

        InstanceStats s;
        CounterRng decode_rng(seed, (row_id << 40) | i);
        const DecodeResult out = run_rule(model, x, rule, scorer, length, decode_rng);
        s.exact = out.tokens == support[support_argmax(support)].y ? 1.0 : 0.0;
        s.util = utility({suite.utility.delta, Aggregation::kAverage}, out.tokens, support);
        s.own = out.total_log_prob / ln10;
        s.own_zero = out.total_log_prob == -kInf;
        const double ref = sequence_log_prob(model, x, reference, scorer).log_prob;
        s.ref = ref / ln10;
        s.ref_zero = ref == -kInf;
        const std::vector<Token> empty{kEos};
        const double lp_empty = sequence_log_prob(model, x, empty, scorer).log_prob;
        s.empty = lp_empty / ln10;
        s.empty_zero = lp_empty == -kInf;
        s.kl = sequence_kl(model, x, support, scorer);

        // Token calibration along a scorer-sampled prefix.
        const auto scorer_id = static_cast<std::uint64_t>(scorer) + 1;
        CounterRng ece_rng(seed, (scorer_id << 32) | (std::uint64_t{1} << 31) | i);
        const DecodeResult path = sample_decode(model, x, scorer, 1.0, ece_rng, length);
        const std::span<const Token> tokens(path.tokens);
        const std::size_t cap = length.max_tokens(x.size());
        for (std::size_t t = 0; t < tokens.size() && t < cap; ++t) {
          const DecisionContext ctx{x, tokens.first(t)};
          const OracleStep truth = true_token_distribution(task, ctx);
          if (truth.unreachable) break;
          const TokenDistribution dist = score(q_values(model, ctx), scorer);
          const std::size_t pred = argmax(dist.probs);
          s.conf.push_back(dist.probs[pred]);
          s.acc.push_back(truth.dist.probs[pred]);
        }
        return s;
      });

      EvalRow row;
      row.rule = rule;
      row.scorer = scorer;
      row.instances = n;
      std::size_t own_n = 0, ref_n = 0, empty_n = 0, kl_n = 0;
      std::vector<double> bin_conf(kEceBins, 0.0), bin_acc(kEceBins, 0.0);
      std::vector<std::size_t> bin_n(kEceBins, 0);
      for (const InstanceStats& s : stats) {
        row.exact_match += s.exact;
        row.expected_utility += s.util;
        if (s.own_zero) {
          ++row.own_zero_count;
        } else {
          row.mean_log10_own += s.own;
          ++own_n;
        }
        if (s.ref_zero) {
          ++row.reference_zero_count;
        } else {
          row.mean_log10_reference += s.ref;
          ++ref_n;
        }
        if (s.empty_zero) {
          ++row.empty_zero_count;
        } else {
          row.mean_log10_empty += s.empty;
          ++empty_n;
        }
        if (std::isinf(s.kl)) {
          ++row.kl_infinite_count;
        } else {
          row.kl += s.kl;
          ++kl_n;
        }
        for (std::size_t k = 0; k < s.conf.size(); ++k) {
          const int b = std::min(kEceBins - 1, static_cast<int>(s.conf[k] * kEceBins));
          bin_conf[static_cast<std::size_t>(b)] += s.conf[k];
          bin_acc[static_cast<std::size_t>(b)] += s.acc[k];
          ++bin_n[static_cast<std::size_t>(b)];
          ++row.ece_tokens;
        }
      }
      const double nn = static_cast<double>(n);
      row.exact_match /= nn;
      row.expected_utility /= nn;
      row.mean_log10_own = own_n ? row.mean_log10_own / static_cast<double>(own_n) : -kInf;
      row.mean_log10_reference =
          ref_n ? row.mean_log10_reference / static_cast<double>(ref_n) : -kInf;
      row.mean_log10_empty =
          empty_n ? row.mean_log10_empty / static_cast<double>(empty_n) : -kInf;
      row.kl = kl_n ? row.kl / static_cast<double>(kl_n) : kInf;
      for (int b = 0; b < kEceBins; ++b) {
        const auto bi = static_cast<std::size_t>(b);
        if (bin_n[bi] == 0) continue;
        const double cnt = static_cast<double>(bin_n[bi]);
        row.ece += cnt / static_cast<double>(row.ece_tokens) *
                   std::abs(bin_conf[bi] / cnt - bin_acc[bi] / cnt);
      }
      table.rows.push_back(row);
    }
  }
  return table;
}

}  // namespace mabe
