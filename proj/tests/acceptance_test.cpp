// Copyright 2026 The mabe-lab Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails. An optional argument selects a single
// criterion by number.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "mabe/analysis.hpp"
#include "mabe/cli.hpp"
#include "mabe/report.hpp"
#include "test_support.hpp"

namespace {

using namespace mabe;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// 1. Gradient identity on random models.

QModel identity_model(int family, CounterRng& rng, std::uint64_t seed) {
  for (;;) {
    const int d = 3 + static_cast<int>(rng.below(10));  // 3..12
    ModelFamily f = family == 0   ? ModelFamily::tabular(1)
                    : family == 1 ? ModelFamily::linear(1 + static_cast<int>(rng.below(2)))
                                  : ModelFamily::one_hidden_layer(3, 6, 1);
    if (param_count(f, d) <= 500) return testing::random_model(f, d, seed, 1.0);
  }
}

Outcome gradient_identity() {
  const auto t0 = Clock::now();
  double worst_fd = 0.0, worst_analytic = 0.0;
  int models = 0;
  for (int family = 0; family < 3; ++family) {
    CounterRng rng(101, static_cast<std::uint64_t>(family));
    for (int i = 0; i < 20; ++i) {
      const QModel model = identity_model(family, rng, 1000 * family + i);
      const SyntheticTask task(NoisyCopySpec{model.vocab_size(), 2, 0.3});
      std::vector<LabeledPair> batch;
      for (int b = 0; b < 4; ++b) batch.push_back(sample_pair(task, rng));
      const GradientIdentityReport r = verify_gradient_identity(model, batch, 1e-5);
      worst_fd = std::max(worst_fd, r.max_relative_residual);
      worst_analytic = std::max(worst_analytic, r.analytic_relative_residual);
      ++models;
    }
  }
  const double secs = seconds_since(t0);
  return {worst_fd <= 1e-4 && worst_analytic <= 1e-9 && secs < 60.0,
          fmt::format("{} models, max FD residual {:.3g}, max analytic residual {:.3g}, {:.1f} s",
                      models, worst_fd, worst_analytic, secs)};
}

// ---------------------------------------------------------------------------
// 2. Tabular fixed points.

Outcome fixed_points() {
  const auto t0 = Clock::now();
  CounterRng rng(7, 0);
  std::vector<std::vector<double>> targets{{1.0, 0.0}};
  for (int i = 0; i < 50; ++i) targets.push_back(random_fixed_point_target(rng, 16));
  double worst_residual = 0.0, worst_spread = 0.0, worst_dual = 0.0;
  double min_margin = std::numeric_limits<double>::infinity();
  int unconverged = 0;
  double gap = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const FixedPointReport r = tabular_fixed_point(targets[i]);
    if (!r.converged) ++unconverged;
    for (std::size_t a = 0; a < r.p_true.size(); ++a) {
      worst_residual = std::max(worst_residual, r.residuals[a]);
      worst_dual = std::max(worst_dual, std::abs(r.dual[a] - r.p_true[a]));
    }
    if (r.margin) min_margin = std::min(min_margin, *r.margin);
    if (r.undesired_spread) worst_spread = std::max(worst_spread, *r.undesired_spread);
    if (i == 0) gap = r.q_star[0] - r.q_star[1];
  }
  const double secs = seconds_since(t0);
  const bool ok = unconverged == 0 && worst_residual <= 1e-8 && min_margin > 1.0 &&
                  worst_spread <= 1e-8 && worst_dual <= 1e-8 &&
                  std::abs(gap - 1.278465) <= 1e-5 && secs < 30.0;
  return {ok, fmt::format("51 targets, unconverged {}, max residual {:.3g}, min margin {:.6f}, "
                          "max spread {:.3g}, max |dual - P| {:.3g}, d=2 gap {:.7f}, {:.2f} s",
                          unconverged, worst_residual, min_margin, worst_spread, worst_dual, gap,
                          secs)};
}

// ---------------------------------------------------------------------------
// 3. MLE trajectory equivalence.

Outcome mle_equivalence() {
  const SyntheticTask task(NoisyCopySpec{5, 2, 0.2});
  struct Case {
    ModelFamily family;
    OptimizerKind optimizer;
    double lr;
  };
  const std::vector<Case> cases{{ModelFamily::tabular(1), OptimizerKind::kSgd, 0.5},
                                {ModelFamily::linear(1), OptimizerKind::kMomentum, 0.05},
                                {ModelFamily::one_hidden_layer(4, 8, 2), OptimizerKind::kAdam, 1e-2}};
  std::string detail;
  bool ok = true;
  for (const Case& c : cases) {
    const QModel init = init_model(c.family, 5, 3);
    TrainConfig cfg;
    cfg.steps = 200;
    cfg.batch_size = 8;
    cfg.seed = 21;
    cfg.optimizer.kind = c.optimizer;
    cfg.optimizer.lr = c.lr;
    cfg.convergence_tol = 0.0;
    cfg.eval_every = 50;
    std::vector<std::vector<double>> seen;
    mabe_train(init, task, cfg, [&](int, const QModel& m) {
      seen.emplace_back(m.params().begin(), m.params().end());
    });
    const auto ref = testing::reference_mle_trajectory(init, task, cfg);
    int first_diff = -1;
    for (std::size_t s = 0; s < ref.size() && first_diff < 0; ++s) {
      if (s >= seen.size() || seen[s] != ref[s]) first_diff = static_cast<int>(s);
    }
    if (seen.size() != ref.size() && first_diff < 0) first_diff = static_cast<int>(seen.size());
    ok = ok && first_diff < 0;
    detail += fmt::format("{}{}: {}", detail.empty() ? "" : ", ", family_tag(c.family.kind),
                          first_diff < 0 ? "identical" : fmt::format("differs at {}", first_diff));
  }
  return {ok, "200 steps; " + detail};
}

// ---------------------------------------------------------------------------
// 4. Loss-form equivalence at every logged step.

Outcome loss_forms() {
  const SyntheticTask task(make_synonym_spec(6, 3, 2, 3, 0.3, 5));
  TrainConfig cfg;
  cfg.steps = 60;
  cfg.batch_size = 16;
  cfg.seed = 8;
  cfg.eval_every = 1;
  cfg.lambda = 0.5;
  const TrainResult r = mabe_train(init_model(ModelFamily::linear(2), 6, 1), task, cfg);
  // Replay the data stream to recover each batch's token count.
  CounterRng data(cfg.seed, 1);
  std::vector<std::size_t> tokens;
  for (int s = 0; s < r.steps_run; ++s) {
    std::size_t t = 0;
    for (int i = 0; i < cfg.batch_size; ++i) t += sample_pair(task, data).y.size();
    tokens.push_back(t);
  }
  double worst = 0.0;
  for (const TrainLogRow& row : r.log) {
    const double n = cfg.batch_size;
    const double total = static_cast<double>(tokens[static_cast<std::size_t>(row.step)]);
    worst = std::max(worst, std::abs(row.j_seq - row.j_data / n));
    worst = std::max(worst, std::abs(row.j_token - row.j_data / total));
  }
  return {worst <= 1e-10 && r.log.size() == 60u,
          fmt::format("{} logged steps, max deviation {:.3g}", r.log.size(), worst)};
}

// ---------------------------------------------------------------------------
// 5. Decoders against enumeration.

struct RandomDecodeCase {
  QModel model;
  std::vector<Token> x;
  LengthRule rule;
};

RandomDecodeCase decode_case(int i) {
  CounterRng rng(555, static_cast<std::uint64_t>(i));
  const int d = 3 + static_cast<int>(rng.below(4));  // 3..6
  const std::vector<ModelFamily> families{ModelFamily::tabular(2), ModelFamily::linear(1),
                                          ModelFamily::one_hidden_layer(3, 5, 1)};
  RandomDecodeCase c{testing::random_model(families[static_cast<std::size_t>(i) % 3], d,
                                           900 + static_cast<std::uint64_t>(i), 2.5),
                     {},
                     {}};
  const int max_len = d >= 6 ? 3 : (d == 5 ? 4 : 5);
  c.rule = LengthRule{1, max_len};
  const std::size_t xlen = 1 + rng.below(2);
  for (std::size_t t = 0; t < xlen; ++t) c.x.push_back(1 + static_cast<Token>(rng.below(d - 1)));
  return c;
}

Outcome decoder_oracles() {
  int map_fail = 0, beam1_fail = 0, beam_full_fail = 0, checked = 0;
  for (Scorer scorer : {Scorer::kSoftmax, Scorer::kDual}) {
    for (int i = 0; i < 50; ++i) {
      const RandomDecodeCase c = decode_case(i);
      const auto leaves = testing::enumerate_leaves(c.model, c.x, scorer, c.rule);
      const testing::Leaf best = testing::brute_force_map(leaves);
      const DecodeResult map = exact_map(c.model, c.x, scorer, c.rule);
      const bool same_score = map.total_log_prob == best.log_prob ||
                              std::abs(map.total_log_prob - best.log_prob) <= 1e-9;
      if (map.tokens != best.y || !same_score) ++map_fail;
      if (beam_search(c.model, c.x, scorer, leaves.size(), c.rule).tokens != map.tokens) {
        ++beam_full_fail;
      }
      const DecodeResult g = greedy_decode(c.model, c.x, c.rule, scorer);
      if (!g.scorer_argmax_mismatch &&
          beam_search(c.model, c.x, scorer, 1, c.rule).tokens != g.tokens) {
        ++beam1_fail;
      }
      ++checked;
    }
  }
  const QModel toy = testing::toy_two_step_model();
  const LengthRule toy_rule{2, 0};
  const DecodeResult g = greedy_decode(toy, testing::toy_input(), toy_rule);
  const DecodeResult m = exact_map(toy, testing::toy_input(), Scorer::kSoftmax, toy_rule);
  const bool toy_ok = g.tokens == std::vector<Token>{testing::kA, testing::kC, kEos} &&
                      m.tokens == std::vector<Token>{testing::kB, testing::kC, kEos} &&
                      std::abs(std::exp(g.total_log_prob) - 0.30) < 1e-12 &&
                      std::abs(std::exp(m.total_log_prob) - 0.36) < 1e-12;
  return {map_fail == 0 && beam1_fail == 0 && beam_full_fail == 0 && toy_ok,
          fmt::format("{} model/scorer pairs: map mismatches {}, beam(1) vs greedy {}, "
                      "exhaustive beam vs map {}; toy greedy p={:.2f}, map p={:.2f}",
                      checked, map_fail, beam1_fail, beam_full_fail, std::exp(g.total_log_prob),
                      std::exp(m.total_log_prob))};
}

// ---------------------------------------------------------------------------
// 6. Sampling fidelity.

Outcome sampling_fidelity() {
  struct Case {
    std::string name;
    QModel model;
    std::vector<Token> x;
    LengthRule rule;
    Scorer scorer;
  };
  std::vector<Case> cases;
  cases.push_back({"toy/softmax", testing::toy_two_step_model(), testing::toy_input(), {2, 0},
                   Scorer::kSoftmax});
  for (Scorer s : {Scorer::kSoftmax, Scorer::kDual}) {
    RandomDecodeCase c = decode_case(7);
    cases.push_back({"random/" + scorer_tag(s), std::move(c.model), c.x, c.rule, s});
  }
  bool ok = true;
  std::string detail;
  for (std::size_t k = 0; k < cases.size(); ++k) {
    const Case& c = cases[k];
    const auto leaves = testing::enumerate_leaves(c.model, c.x, c.scorer, c.rule);
    std::map<std::vector<Token>, std::size_t> index;
    std::vector<double> probs;
    for (std::size_t i = 0; i < leaves.size(); ++i) {
      index[leaves[i].y] = i;
      probs.push_back(std::exp(leaves[i].reach_log_prob));
    }
    std::vector<std::size_t> counts(leaves.size(), 0);
    CounterRng rng(31, k);
    for (int n = 0; n < 100000; ++n) {
      ++counts[index.at(sample_decode(c.model, c.x, c.scorer, 1.0, rng, c.rule).tokens)];
    }
    const double p = testing::chi_square_p_value(probs, counts);
    CounterRng zero_rng(32, k);
    const DecodeResult g = greedy_decode(c.model, c.x, c.rule, c.scorer);
    const bool zero_ok =
        sample_decode(c.model, c.x, c.scorer, 0.0, zero_rng, c.rule).tokens == g.tokens;
    ok = ok && p > 0.001 && zero_ok;
    detail += fmt::format("{}{} p={:.3g} beta0=greedy:{}", detail.empty() ? "" : ", ", c.name, p,
                          zero_ok ? "yes" : "no");
  }
  return {ok, "1e5 draws each; " + detail};
}

// ---------------------------------------------------------------------------
// 7 and 8. Tabular bandit training.

struct BanditRun {
  double kl_dual = 0.0;
  double kl_softmax = 0.0;
  Token greedy = 0;
};

BanditRun train_bandit(const std::vector<double>& probs, double lambda, int batch, int steps,
                       OptimizerSpec opt, std::uint64_t seed) {
  const SyntheticTask task(BanditSpec{static_cast<int>(probs.size()) + 1, probs});
  TrainConfig cfg;
  cfg.lambda = lambda;
  cfg.optimizer = opt;
  cfg.batch_size = batch;
  cfg.steps = steps;
  cfg.seed = seed;
  cfg.eval_every = steps;
  cfg.probe_size = 0;
  cfg.convergence_tol = 0.0;
  const TrainResult r =
      mabe_train(init_model(ModelFamily::tabular(1), task.vocab_size(), 0), task, cfg);
  const auto support = enumerate_support(task, {});
  BanditRun out;
  out.kl_dual = sequence_kl(r.model, {}, support, Scorer::kDual);
  out.kl_softmax = sequence_kl(r.model, {}, support, Scorer::kSoftmax);
  out.greedy = greedy_decode(r.model, {}, task.length_rule()).tokens.front();
  return out;
}

const OptimizerSpec kDualRecoveryOpt{OptimizerKind::kSgd, 0.1};
// A short second-moment memory lets the zero-probability logits keep moving
// once their gradients have shrunk; the small step keeps minibatch jitter on
// the supported tokens well under the KL bound.
OptimizerSpec mle_optimizer() {
  OptimizerSpec opt{OptimizerKind::kAdam, 0.002};
  opt.beta2 = 0.99;
  return opt;
}

Outcome dual_recovery() {
  const auto t0 = Clock::now();
  const std::vector<std::vector<double>> tasks{
      {0.6, 0.4, 0.0}, {0.7, 0.0, 0.3}, {0.5, 0.3, 0.2, 0.0, 0.0}};
  bool ok = true;
  std::string detail;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const BanditRun adv = train_bandit(tasks[i], 0.0, 4096, 2000, kDualRecoveryOpt, 40 + i);
    const BanditRun mle = train_bandit(tasks[i], 1.0, 4096, 6000, mle_optimizer(), 40 + i);
    ok = ok && adv.kl_dual <= 1e-4 && adv.kl_softmax >= 0.01 && mle.kl_softmax <= 1e-4;
    detail += fmt::format("{}d={}: MABE(0) KL dual {:.2g} softmax {:.2g}, MLE KL softmax {:.2g}",
                          detail.empty() ? "" : "; ", tasks[i].size() + 1, adv.kl_dual,
                          adv.kl_softmax, mle.kl_softmax);
  }
  const double secs = seconds_since(t0);
  return {ok && secs < 300.0, fmt::format("{}; {:.0f} s", detail, secs)};
}

Outcome greedy_agreement() {
  CounterRng rng(88, 0);
  int instances = 0, agree = 0;
  while (instances < 20) {
    const std::vector<double> target = random_fixed_point_target(rng, 8);
    std::vector<double> sorted = target;
    std::sort(sorted.rbegin(), sorted.rend());
    if (sorted[0] - sorted[1] < 0.05) continue;
    // Bandit probabilities cover the action tokens only.
    const std::vector<double> probs(target.begin(), target.end());
    const auto best = static_cast<Token>(
        1 + std::distance(probs.begin(), std::max_element(probs.begin(), probs.end())));
    const auto seed = static_cast<std::uint64_t>(instances);
    const BanditRun adv = train_bandit(probs, 0.0, 1024, 400, OptimizerSpec{OptimizerKind::kSgd, 0.5}, seed);
    const BanditRun mle = train_bandit(probs, 1.0, 1024, 400, OptimizerSpec{OptimizerKind::kAdam, 0.1}, seed);
    ++instances;
    if (adv.greedy == best && mle.greedy == best) ++agree;
  }
  return {agree == instances,
          fmt::format("{}/{} bandit instances: lambda=0 and lambda=1 greedy both pick argmax P",
                      agree, instances)};
}

// ---------------------------------------------------------------------------
// 9. Decision-rule oracles.

Outcome rule_oracles() {
  struct Case {
    std::string name;
    SyntheticTask task;
    UtilitySpec utility;
  };
  const std::vector<Case> cases{
      {"case1", SyntheticTask(NoisyCopySpec{4, 3, 0.3}),
       {Similarity::kExactMatch, Aggregation::kAverage}},
      {"case2", SyntheticTask(NoisyCopySpec{5, 3, 0.0}),
       {Similarity::kTokenOverlapF1, Aggregation::kAverage}},
      {"case3", SyntheticTask(make_synonym_spec(6, 2, 2, 2, 0.2, 4)),
       {Similarity::kTokenOverlapF1, Aggregation::kMaxOverSupport}},
  };
  bool ok = true;
  std::string detail;
  for (const Case& c : cases) {
    const OracleReport map = map_optimality_check(c.task, c.utility, 100, 9);
    const OracleReport samp = sampling_soundness_check(c.task, c.utility, 100, 9);
    const bool case_ok = map.counterexamples.empty() && samp.counterexamples.empty() &&
                         map.passed == 100 && samp.passed == 100;
    ok = ok && case_ok;
    detail += fmt::format("{}{}: map {}/{} ({} counterexamples), sampling {}/{} ({})",
                          detail.empty() ? "" : "; ", c.name, map.passed, map.instances,
                          map.counterexamples.size(), samp.passed, samp.instances,
                          samp.counterexamples.size());
  }
  return {ok, detail};
}

// ---------------------------------------------------------------------------
// 10. Lambda sweep on NoisyCopy with a hidden-layer model.

Outcome lambda_sweep() {
  const SyntheticTask task(NoisyCopySpec{5, 3, 0.1});
  const QModel init = init_model(ModelFamily::one_hidden_layer(4, 16, 2), 5, 2);
  std::string detail;
  bool ok = true;
  for (double lambda : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
    TrainConfig cfg;
    cfg.lambda = lambda;
    cfg.optimizer = OptimizerSpec{OptimizerKind::kAdam, 1e-2};
    cfg.steps = 800;
    cfg.batch_size = 32;
    cfg.seed = 10;
    cfg.eval_every = 100;
    cfg.probe_size = 128;
    try {
      const TrainResult r = mabe_train(init, task, cfg);
      const double em = r.log.back().greedy_exact_match;
      detail += fmt::format("{}lambda={:g}: exact match {:.3f}", detail.empty() ? "" : ", ",
                            lambda, em);
    } catch (const Error& e) {
      ok = false;
      detail += fmt::format("{}lambda={:g}: {}", detail.empty() ? "" : ", ", lambda, e.what());
    }
  }
  return {ok, "800 steps each; " + detail};
}

// ---------------------------------------------------------------------------
// 11. Byte-identical CSV output from every subcommand.

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"mabe"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

std::map<std::string, std::string> csv_files(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    // timing.csv holds wall-clock measurements only.
    if (e.path().extension() == ".csv" && e.path().filename() != "timing.csv") {
      files[fs::relative(e.path(), dir).string()] = read_file(e.path());
    }
  }
  return files;
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "mabe_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  const std::string config = (root / "config.json").string();
  std::ofstream(config) << R"({
    "task": {"kind": "synonym", "vocab_size": 6, "input_length": 2, "truncation_prob": 0.2},
    "model": {"family": "one_hidden_layer", "context_order": 1, "embed_dim": 4, "hidden_dim": 8},
    "train": {"steps": 60, "batch_size": 16, "eval_every": 10},
    "decode": {"instances": 6, "betas": [0.5, 1.0], "beams": [1, 3]},
    "eval": {"instances": 12, "similarity": "token_f1"},
    "sweep": {"lambdas": [-1, 0, 1]},
    "theorem": {"random_instances": 10, "landscape": {"lo": -4, "hi": 4, "step": 0.01}},
    "gradcheck": {"batch_size": 3}
  })";
  std::vector<std::string> failures;
  std::size_t compared = 0;
  auto twice = [&](const std::string& cmd, std::vector<std::string> extra) {
    std::map<std::string, std::string> outputs[2];
    for (int k = 0; k < 2; ++k) {
      const std::string out = (root / fmt::format("{}_{}", cmd, k)).string();
      std::vector<std::string> args{cmd, "--config", config, "--seed", "17", "--out", out};
      args.insert(args.end(), extra.begin(), extra.end());
      if (run(args) != kExitOk) failures.push_back(cmd + " exited nonzero");
      outputs[k] = csv_files(out);
    }
    if (outputs[0].empty()) failures.push_back(cmd + " wrote no CSV");
    if (outputs[0] != outputs[1]) failures.push_back(cmd + " CSV differs");
    compared += outputs[0].size();
  };
  twice("train", {});
  const std::string ckpt = (root / "train_0" / "checkpoint.txt").string();
  twice("decode", {"--checkpoint", ckpt});
  twice("evaluate", {"--checkpoint", ckpt});
  twice("sweep", {});
  twice("theorem", {});
  twice("gradcheck", {});
  // report renders into <run>/report; run it on both sweep outputs.
  std::map<std::string, std::string> reports[2];
  for (int k = 0; k < 2; ++k) {
    const fs::path dir = root / fmt::format("sweep_{}", k);
    if (run({"report", "--out", dir.string()}) != kExitOk) failures.push_back("report exited nonzero");
    reports[k] = csv_files(dir / "report");
  }
  if (reports[0].empty()) failures.push_back("report wrote no CSV");
  if (reports[0] != reports[1]) failures.push_back("report CSV differs");
  compared += reports[0].size();

  std::string detail = fmt::format("7 subcommands, {} CSV files compared", compared);
  for (const auto& f : failures) detail += "; " + f;
  return {failures.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gradient identity on random models", gradient_identity},
      {"tabular fixed points and d=2 gap", fixed_points},
      {"lambda=1 trajectory equals reference MLE", mle_equivalence},
      {"J_seq and J_token loss forms", loss_forms},
      {"decoders match enumeration", decoder_oracles},
      {"sampling fidelity", sampling_fidelity},
      {"dual recovery on bandits", dual_recovery},
      {"greedy agreement with argmax P", greedy_agreement},
      {"decision-rule oracle checks", rule_oracles},
      {"lambda sweep report", lambda_sweep},
      {"determinism of CLI outputs", determinism},
  };
  const int only = argc > 1 ? std::atoi(argv[1]) : 0;
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int number = static_cast<int>(i) + 1;
    if (only != 0 && only != number) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("criterion %2d %s: %s | %s\n", number, o.pass ? "PASS" : "FAIL",
                criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
