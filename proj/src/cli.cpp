// Copyright 2026 The mabe-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "mabe/cli.hpp"

#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif
#include <fmt/format.h>
#include <fmt/ranges.h>
#include <nlohmann/json.hpp>

#include "mabe/analysis.hpp"
#include "mabe/checkpoint.hpp"
#include "mabe/config.hpp"
#include "mabe/decoding.hpp"
#include "mabe/parallel.hpp"
#include "mabe/report.hpp"
#include "mabe/training.hpp"

namespace mabe {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<double> lambda;
  std::optional<std::size_t> beam;
  std::optional<double> beta;
  std::optional<std::string> scorer;
  std::optional<std::string> rule;
  std::optional<std::string> checkpoint;
};

/// A failed check after the run itself completed.
struct CheckFailed {
  std::string what;
};

Json json_real(double v) {
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

Json json_reals(std::span<const double> v) {
  Json a = Json::array();
  for (double x : v) a.push_back(json_real(x));
  return a;
}

std::string show_tokens(std::span<const Token> y) { return fmt::format("{}", fmt::join(y, " ")); }

std::string checkpoint_text(const QModel& model, long step) {
  std::ostringstream ss;
  write_checkpoint(ss, model, step);
  return ss.str();
}

ExperimentConfig resolve(const Flags& f) {
  ExperimentConfig c = f.config.empty() ? parse_config("{}") : load_config(f.config);
  if (f.seed) {
    c.seed = *f.seed;
    c.train.seed = *f.seed;
  }
  if (f.out) c.out = *f.out;
  if (f.lambda) c.train.lambda = *f.lambda;
  if (f.scorer) c.decode.scorers = {scorer_from_tag(*f.scorer)};
  if (f.rule) c.decode.rules = {rule_from_tag(*f.rule)};
  if (f.beam) c.decode.beams = {*f.beam};
  if (f.beta) c.decode.betas = {*f.beta};
  if (f.checkpoint) c.checkpoint = *f.checkpoint;
  if (!c.seed) throw ParseError("seed", "required (set it in the config or pass --seed)");
  if (!c.out) throw ParseError("out", "required (set it in the config or pass --out)");
  validate(c);
  return c;
}

QModel load_model_for(const ExperimentConfig& c, const SyntheticTask& task) {
  if (!c.checkpoint) {
    throw ParseError("checkpoint", "required (set it in the config or pass --checkpoint)");
  }
  QModel model = load_checkpoint(*c.checkpoint).model;
  check_compatible(model, task);
  return model;
}

std::vector<std::string> log_cells(const TrainLogRow& r) {
  return {std::to_string(r.step),     format_real(r.j_data),    format_real(r.j_seq),
          format_real(r.j_token),     format_real(r.j_mabe),    format_real(r.grad_norm),
          format_real(r.greedy_exact_match)};
}

const std::vector<std::string> kLogHeader{"step",   "j_data",    "j_seq",
                                          "j_token", "j_mabe",   "grad_norm",
                                          "greedy_exact_match"};

// ---------------------------------------------------------------------------

void cmd_train(const ExperimentConfig& c, RunDirectory& run, std::ostream& out) {
  const SyntheticTask task = make_task(c.task);
  const QModel init = init_model(make_family(c.model), task.vocab_size(), *c.seed);
  StepObserver observer;
  if (c.checkpoint_every > 0) {
    observer = [&](int step, const QModel& m) {
      const long done = step + 1;
      if (done % c.checkpoint_every == 0) {
        run.write(fmt::format("checkpoints/step_{:08d}.txt", done), checkpoint_text(m, done));
      }
    };
  }
  const TrainResult result = mabe_train(init, task, c.train, observer);

  CsvTable log(kLogHeader);
  CsvTable timing({"step", "wall_ms"});
  for (const TrainLogRow& r : result.log) {
    log.row(log_cells(r));
    timing.row({std::to_string(r.step), format_real(r.wall_ms)});
  }
  run.write("train_log.csv", log.str());
  run.write("timing.csv", timing.str());
  run.write("checkpoint.txt", checkpoint_text(result.model, result.steps_run));

  Json summary;
  summary["steps_run"] = result.steps_run;
  summary["converged"] = result.converged;
  if (!result.log.empty()) {
    const TrainLogRow& last = result.log.back();
    summary["final"] = {{"step", last.step},
                        {"j_seq", json_real(last.j_seq)},
                        {"j_mabe", json_real(last.j_mabe)},
                        {"greedy_exact_match", json_real(last.greedy_exact_match)}};
  }
  run.write("summary.json", summary.dump(2) + "\n");
  out << fmt::format("train: {} steps{}, final greedy exact match {}\n", result.steps_run,
                     result.converged ? " (converged)" : "",
                     result.log.empty() ? "n/a" : format_real(result.log.back().greedy_exact_match));
}

void cmd_decode(const ExperimentConfig& c, RunDirectory& run, std::ostream& out) {
  const SyntheticTask task = make_task(c.task);
  const QModel model = load_model_for(c, task);
  const EvalSuite suite = make_suite(c.decode, c.eval.similarity);
  const LengthRule length = task.length_rule();
  const std::uint64_t seed = *c.seed;

  struct Record {
    std::size_t instance;
    std::vector<Token> x;
    std::string rule;
    Scorer scorer;
    DecodeResult result;
  };
  const auto per_instance = parallel_map(c.decode.instances, [&](std::size_t i) {
    CounterRng inst(seed, i);
    const std::vector<Token> x = sample_input(task, inst);
    std::vector<Record> recs;
    std::uint64_t row = 0;
    for (Scorer scorer : suite.scorers) {
      for (const DecisionRule& rule : suite.rules) {
        ++row;
        CounterRng rng(seed, (row << 40) | i);
        DecodeResult r;
        try {
          r = run_rule(model, x, rule, scorer, length, rng);
        } catch (const NodeBudgetExceeded& e) {
          r = e.best_so_far();
        }
        recs.push_back({i, x, rule.label(), scorer, std::move(r)});
      }
    }
    return recs;
  });

  CsvTable csv({"instance", "x", "rule", "scorer", "tokens", "total_log10_prob", "forced_eos",
                "candidates_expanded", "zero_step", "partial"});
  Json records = Json::array();
  for (const auto& recs : per_instance) {
    for (const Record& r : recs) {
      const DecodeResult& d = r.result;
      csv.row({std::to_string(r.instance), show_tokens(r.x), r.rule, scorer_tag(r.scorer),
               show_tokens(d.tokens), format_real(d.total_log10_prob()),
               d.forced_eos ? "1" : "0", std::to_string(d.candidates_expanded),
               d.zero_step ? std::to_string(*d.zero_step) : "", d.partial ? "1" : "0"});
      Json j;
      j["instance"] = r.instance;
      j["x"] = r.x;
      j["rule"] = r.rule;
      j["scorer"] = scorer_tag(r.scorer);
      j["tokens"] = d.tokens;
      j["step_log_probs"] = json_reals(d.step_log_probs);
      j["total_log10_prob"] = json_real(d.total_log10_prob());
      j["forced_eos"] = d.forced_eos;
      j["candidates_expanded"] = d.candidates_expanded;
      j["partial"] = d.partial;
      j["scorer_argmax_mismatch"] = d.scorer_argmax_mismatch;
      j["zero_step"] = d.zero_step ? Json(*d.zero_step) : Json(nullptr);
      records.push_back(std::move(j));
    }
  }
  run.write("decode.csv", csv.str());
  run.write("decode.json", records.dump(2) + "\n");
  out << fmt::format("decode: {} results over {} instances\n", csv.rows(), c.decode.instances);
}

void cmd_sweep(const ExperimentConfig& c, RunDirectory& run, std::ostream& out) {
  const SyntheticTask task = make_task(c.task);
  const QModel init = init_model(make_family(c.model), task.vocab_size(), *c.seed);
  const auto results = parallel_map(c.sweep.lambdas.size(), [&](std::size_t i) {
    TrainConfig tc = c.train;
    tc.lambda = c.sweep.lambdas[i];
    tc.label_smoothing = tc.lambda == 1.0 ? tc.label_smoothing : 0.0;
    return mabe_train(init, task, tc);
  });

  std::vector<std::string> header{"lambda"};
  header.insert(header.end(), kLogHeader.begin(), kLogHeader.end());
  CsvTable curves(header);
  CsvTable timing({"lambda", "step", "wall_ms"});
  CsvTable final({"lambda", "steps_run", "converged", "final_greedy_exact_match", "final_j_seq",
                  "final_j_mabe"});
  for (std::size_t i = 0; i < results.size(); ++i) {
    const std::string lam = format_real(c.sweep.lambdas[i]);
    for (const TrainLogRow& r : results[i].log) {
      std::vector<std::string> cells{lam};
      const auto rest = log_cells(r);
      cells.insert(cells.end(), rest.begin(), rest.end());
      curves.row(cells);
      timing.row({lam, std::to_string(r.step), format_real(r.wall_ms)});
    }
    const TrainLogRow last = results[i].log.empty() ? TrainLogRow{} : results[i].log.back();
    final.row({lam, std::to_string(results[i].steps_run), results[i].converged ? "1" : "0",
               format_real(last.greedy_exact_match), format_real(last.j_seq),
               format_real(last.j_mabe)});
    run.write("checkpoints/lambda_" + lam + ".txt",
              checkpoint_text(results[i].model, results[i].steps_run));
    out << fmt::format("sweep: lambda={} final greedy exact match {}\n", lam,
                       format_real(last.greedy_exact_match));
  }
  run.write("sweep.csv", curves.str());
  run.write("sweep_final.csv", final.str());
  run.write("timing.csv", timing.str());
}

Json fixed_point_json(const FixedPointReport& r) {
  Json j;
  j["p_true"] = json_reals(r.p_true);
  j["q_star"] = json_reals(r.q_star);
  j["p_star"] = json_reals(r.p_star);
  j["dual"] = json_reals(r.dual);
  j["residuals"] = json_reals(r.residuals);
  j["margin"] = r.margin ? json_real(*r.margin) : Json(nullptr);
  j["undesired_spread"] = r.undesired_spread ? json_real(*r.undesired_spread) : Json(nullptr);
  j["objective"] = json_real(r.objective);
  j["max_gradient"] = json_real(r.max_gradient);
  j["steps"] = r.steps;
  j["converged"] = r.converged;
  return j;
}

void cmd_theorem(const ExperimentConfig& c, RunDirectory& run, std::ostream& out) {
  std::vector<std::vector<double>> targets = c.theorem.targets;
  CounterRng rng(*c.seed, 0);
  for (std::size_t i = 0; i < c.theorem.random_instances; ++i) {
    targets.push_back(random_fixed_point_target(rng, c.theorem.max_d));
  }
  const auto reports = parallel_map(targets.size(), [&](std::size_t i) {
    return tabular_fixed_point(targets[i], c.theorem.solver);
  });

  Json reports_json = Json::array();
  Json landscapes = Json::array();
  CsvTable table({"instance", "d", "support_size", "converged", "steps", "max_residual", "margin",
                  "undesired_spread", "dual_max_error", "objective"});
  CsvTable landscape({"instance", "q_free", "objective"});
  std::size_t unconverged = 0;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const FixedPointReport& r = reports[i];
    std::size_t support = 0;
    double dual_err = 0.0;
    for (std::size_t a = 0; a < r.p_true.size(); ++a) {
      support += r.p_true[a] > 0.0 ? 1 : 0;
      dual_err = std::max(dual_err, std::abs(r.dual[a] - r.p_true[a]));
    }
    const double max_res = *std::max_element(r.residuals.begin(), r.residuals.end());
    table.row({std::to_string(i), std::to_string(r.p_true.size()), std::to_string(support),
               r.converged ? "1" : "0", std::to_string(r.steps), format_real(max_res),
               r.margin ? format_real(*r.margin) : "",
               r.undesired_spread ? format_real(*r.undesired_spread) : "", format_real(dual_err),
               format_real(r.objective)});
    reports_json.push_back(fixed_point_json(r));
    if (!r.converged) ++unconverged;

    if (r.p_true.size() == 2) {
      const LandscapeReport l = j_landscape(r.p_true, 0, c.theorem.grid);
      Json maxima = Json::array();
      for (const LandscapeMaximum& m : l.maxima) {
        maxima.push_back({{"q_free", json_real(m.q_free)}, {"objective", json_real(m.objective)}});
      }
      landscapes.push_back({{"instance", i}, {"gauge_token", l.gauge_token}, {"maxima", maxima}});
      for (std::size_t k = 0; k < l.q_free.size(); ++k) {
        landscape.row({std::to_string(i), format_real(l.q_free[k]), format_real(l.objective[k])});
      }
    }
  }
  Json doc;
  doc["reports"] = reports_json;
  doc["landscapes"] = landscapes;
  run.write("theorem.json", doc.dump(2) + "\n");
  run.write("theorem.csv", table.str());
  if (landscape.rows() > 0) run.write("landscape.csv", landscape.str());
  out << fmt::format("theorem: {} fixed points, {} unconverged\n", reports.size(), unconverged);
  if (unconverged > 0) throw CheckFailed{fmt::format("{} fixed points did not converge", unconverged)};
}

void cmd_gradcheck(const ExperimentConfig& c, RunDirectory& run, std::ostream& out) {
  const SyntheticTask task = make_task(c.task);
  const QModel model = init_model(make_family(c.model), task.vocab_size(), *c.seed);
  CounterRng rng(*c.seed, 3);
  std::vector<LabeledPair> batch;
  for (int i = 0; i < c.gradcheck.batch_size; ++i) batch.push_back(sample_pair(task, rng));
  const GradientIdentityReport r = verify_gradient_identity(model, batch, c.gradcheck.h);

  CsvTable csv({"coordinate", "logp_grad", "jmabe_grad", "cov_grad", "residual"});
  for (std::size_t j = 0; j < r.cov_grad.size(); ++j) {
    csv.row({std::to_string(j), format_real(r.logp_grad[j]), format_real(r.jmabe_grad[j]),
             format_real(r.cov_grad[j]),
             format_real(r.logp_grad[j] - r.jmabe_grad[j] - r.cov_grad[j])});
  }
  Json j;
  j["family"] = c.model.family;
  j["param_count"] = model.size();
  j["batch_size"] = batch.size();
  j["h"] = c.gradcheck.h;
  j["max_relative_residual"] = json_real(r.max_relative_residual);
  j["worst_coordinate"] = r.worst_coordinate;
  j["analytic_relative_residual"] = json_real(r.analytic_relative_residual);
  j["tolerance"] = c.gradcheck.tolerance;
  j["passed"] = r.max_relative_residual <= c.gradcheck.tolerance;
  run.write("gradcheck.csv", csv.str());
  run.write("gradcheck.json", j.dump(2) + "\n");
  out << fmt::format("gradcheck: max relative residual {} (analytic {}) over {} parameters\n",
                     format_real(r.max_relative_residual),
                     format_real(r.analytic_relative_residual), model.size());
  if (r.max_relative_residual > c.gradcheck.tolerance) {
    throw CheckFailed{"residual " + format_real(r.max_relative_residual) + " exceeds tolerance " +
                      format_real(c.gradcheck.tolerance)};
  }
}

const std::vector<std::string> kEvalHeader{
    "rule",        "beta",           "beam",          "scorer",
    "instances",   "exact_match",    "expected_utility", "mean_log10_own",
    "own_zero_count", "mean_log10_reference", "reference_zero_count", "mean_log10_empty",
    "empty_zero_count", "kl",        "kl_infinite_count", "ece",
    "ece_tokens"};

void cmd_evaluate(const ExperimentConfig& c, RunDirectory& run, std::ostream& out) {
  const SyntheticTask task = make_task(c.task);
  const QModel model = load_model_for(c, task);
  const EvalSuite suite = make_suite(c.decode, c.eval.similarity);
  const EvalTable table = evaluate_decoders(model, task, suite, c.eval.instances, *c.seed);

  CsvTable csv(kEvalHeader);
  Json rows = Json::array();
  for (const EvalRow& r : table.rows) {
    csv.row({rule_tag(r.rule.kind), format_real(r.rule.beta), std::to_string(r.rule.beam),
             scorer_tag(r.scorer), std::to_string(r.instances), format_real(r.exact_match),
             format_real(r.expected_utility), format_real(r.mean_log10_own),
             std::to_string(r.own_zero_count), format_real(r.mean_log10_reference),
             std::to_string(r.reference_zero_count), format_real(r.mean_log10_empty),
             std::to_string(r.empty_zero_count), format_real(r.kl),
             std::to_string(r.kl_infinite_count), format_real(r.ece),
             std::to_string(r.ece_tokens)});
    Json j;
    j["rule"] = r.rule.label();
    j["scorer"] = scorer_tag(r.scorer);
    j["instances"] = r.instances;
    j["exact_match"] = json_real(r.exact_match);
    j["expected_utility"] = json_real(r.expected_utility);
    j["mean_log10_own"] = json_real(r.mean_log10_own);
    j["own_zero_count"] = r.own_zero_count;
    j["mean_log10_reference"] = json_real(r.mean_log10_reference);
    j["reference_zero_count"] = r.reference_zero_count;
    j["mean_log10_empty"] = json_real(r.mean_log10_empty);
    j["empty_zero_count"] = r.empty_zero_count;
    j["kl"] = json_real(r.kl);
    j["kl_infinite_count"] = r.kl_infinite_count;
    j["ece"] = json_real(r.ece);
    j["ece_tokens"] = r.ece_tokens;
    rows.push_back(std::move(j));
  }
  run.write("eval.csv", csv.str());
  run.write("eval.json", rows.dump(2) + "\n");
  out << fmt::format("evaluate: {} rows over {} instances\n", table.rows.size(),
                     c.eval.instances);
}

// ---------------------------------------------------------------------------
// report

double cell_real(const std::string& s) {
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  if (s.empty() || s == "nan") return NAN;
  return std::stod(s);
}

LineChart curves_by(const CsvData& data, const std::string& group_col, const std::string& x_col,
                    const std::string& y_col, const std::string& title,
                    const std::string& group_prefix) {
  LineChart chart{title, x_col, y_col, {}};
  const std::size_t g = data.column(group_col);
  const std::size_t xi = data.column(x_col);
  const std::size_t yi = data.column(y_col);
  std::map<std::string, std::size_t> index;
  for (const auto& row : data.rows) {
    auto [it, fresh] = index.try_emplace(row[g], chart.series.size());
    if (fresh) chart.series.push_back({group_prefix + row[g], {}, {}});
    chart.series[it->second].x.push_back(cell_real(row[xi]));
    chart.series[it->second].y.push_back(cell_real(row[yi]));
  }
  return chart;
}

std::string summary_table(const CsvData& eval) {
  std::string s = fmt::format("{:<18} {:<8} {:>9} {:>10} {:>12} {:>12} {:>10} {:>8} {:>6}\n",
                              "rule", "scorer", "exact %", "utility", "log10 own",
                              "log10 ref", "KL", "ECE", "zeros");
  for (const auto& r : eval.rows) {
    const std::string kind = r[eval.column("rule")];
    std::string label = kind;
    if (kind == "sample") label += "(beta=" + r[eval.column("beta")] + ")";
    if (kind == "beam") label += "(" + r[eval.column("beam")] + ")";
    s += fmt::format("{:<18} {:<8} {:>9.2f} {:>10.4f} {:>12} {:>12} {:>10} {:>8} {:>6}\n", label,
                     r[eval.column("scorer")], 100.0 * cell_real(r[eval.column("exact_match")]),
                     cell_real(r[eval.column("expected_utility")]),
                     r[eval.column("mean_log10_own")], r[eval.column("mean_log10_reference")],
                     r[eval.column("kl")], r[eval.column("ece")],
                     r[eval.column("reference_zero_count")]);
  }
  return s;
}

int cmd_report(const fs::path& dir, std::ostream& out, std::ostream& err) {
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) {
    err << "report: missing input " << manifest_path.string() << "\n";
    return kExitFailure;
  }
  const Json manifest = Json::parse(read_file(manifest_path));
  if (manifest.value("status", "") != "complete") {
    err << "report: run in " << dir.string() << " is not complete\n";
    return kExitFailure;
  }
  std::vector<std::string> missing;
  std::map<std::string, std::string> inputs;
  std::string fingerprint;
  for (const auto& f : manifest.at("files")) {
    const std::string name = f.at("path").get<std::string>();
    if (!fs::exists(dir / name)) {
      missing.push_back(name);
      continue;
    }
    fingerprint += name + " " + f.at("sha256").get<std::string>() + "\n";
    if (name.ends_with(".csv")) inputs[name] = read_file(dir / name);
  }

  RunDirectory run(dir / "report", "report", fingerprint);
  std::string summary;
  std::size_t charts = 0;
  auto chart = [&](const std::string& name, const LineChart& c) {
    run.write(name, render_svg(c));
    ++charts;
  };
  if (inputs.count("train_log.csv")) {
    const CsvData log = parse_csv(inputs["train_log.csv"]);
    CsvData tagged = log;
    tagged.header.insert(tagged.header.begin(), "series");
    for (auto& row : tagged.rows) row.insert(row.begin(), "run");
    chart("train_j_seq.svg", curves_by(tagged, "series", "step", "j_seq", "J_seq vs step", ""));
    chart("train_exact_match.svg", curves_by(tagged, "series", "step", "greedy_exact_match",
                                             "Greedy exact match vs step", ""));
  }
  if (inputs.count("sweep.csv")) {
    const CsvData sweep = parse_csv(inputs["sweep.csv"]);
    chart("sweep_exact_match.svg",
          curves_by(sweep, "lambda", "step", "greedy_exact_match",
                    "Greedy exact match vs step per lambda", "lambda="));
    chart("sweep_j_seq.svg",
          curves_by(sweep, "lambda", "step", "j_seq", "J_seq vs step per lambda", "lambda="));
    run.write("sweep_curves.csv", inputs["sweep.csv"]);
  }
  if (inputs.count("sweep_final.csv")) {
    summary += "lambda sweep (final greedy exact match)\n";
    const CsvData fin = parse_csv(inputs["sweep_final.csv"]);
    for (const auto& r : fin.rows) {
      summary += fmt::format("  lambda={:<6} exact={:<10} j_seq={}\n", r[fin.column("lambda")],
                             r[fin.column("final_greedy_exact_match")],
                             r[fin.column("final_j_seq")]);
    }
    summary += "\n";
  }
  if (inputs.count("eval.csv")) {
    const CsvData eval = parse_csv(inputs["eval.csv"]);
    CsvData beams{eval.header, {}};
    for (const auto& r : eval.rows) {
      if (r[eval.column("rule")] == "beam") beams.rows.push_back(r);
    }
    if (!beams.rows.empty()) {
      chart("beam_exact_match.svg", curves_by(beams, "scorer", "beam", "exact_match",
                                              "Task metric vs beam size", ""));
      chart("beam_log10_prob.svg", curves_by(beams, "scorer", "beam", "mean_log10_own",
                                             "Mean log10 probability vs beam size", ""));
      run.write("beam_sweep.csv", CsvTable(beams.header).str() + [&] {
        std::string body;
        for (const auto& r : beams.rows) body += fmt::format("{}\n", fmt::join(r, ","));
        return body;
      }());
    }
    summary += summary_table(eval) + "\n";
  }
  if (inputs.count("theorem.csv")) {
    const CsvData th = parse_csv(inputs["theorem.csv"]);
    summary += "fixed points\n";
    for (const auto& r : th.rows) {
      summary += fmt::format("  #{:<3} d={:<3} converged={} residual={:<12} margin={:<12} "
                             "spread={}\n",
                             r[th.column("instance")], r[th.column("d")],
                             r[th.column("converged")], r[th.column("max_residual")],
                             r[th.column("margin")], r[th.column("undesired_spread")]);
    }
    summary += "\n";
  }
  if (charts == 0 && summary.empty()) {
    err << "report: no recognized inputs (train_log.csv, sweep.csv, sweep_final.csv, eval.csv, "
           "theorem.csv) in " << dir.string() << "\n";
    run.fail("no recognized inputs");
    return kExitFailure;
  }
  run.write("summary.txt", summary);
  for (const std::string& m : missing) err << "report: missing input " << m << " (skipped)\n";
  if (!missing.empty()) {
    run.fail("missing inputs: " + fmt::format("{}", fmt::join(missing, ", ")));
    return kExitFailure;
  }
  run.finish();
  out << fmt::format("report: {} charts written to {}\n", charts, (dir / "report").string());
  return kExitOk;
}

using Command = void (*)(const ExperimentConfig&, RunDirectory&, std::ostream&);

int execute(const std::string& name, Command cmd, const Flags& flags, std::ostream& out,
            std::ostream& err) {
  ExperimentConfig config;
  try {
    config = resolve(flags);
  } catch (const ParseError& e) {
    err << "error: invalid config at " << e.where() << ": " << e.detail() << "\n";
    return kExitBadConfig;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitBadConfig;
  }
  const std::string config_json = config_to_json(config);
  std::optional<RunDirectory> run;
  try {
    run.emplace(*config.out, name, config_json);
    run->write("config.json", config_json);
    cmd(config, *run, out);
    run->finish();
    return kExitOk;
  } catch (const CheckFailed& e) {
    if (run) run->finish();
    err << name << ": check failed: " << e.what << "\n";
    return kExitFailure;
  } catch (const ParseError& e) {
    if (run) run->fail(e.what());
    err << "error: " << e.where() << ": " << e.detail() << "\n";
    return kExitBadConfig;
  } catch (const std::exception& e) {
    if (run) run->fail(e.what());
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

void add_common(CLI::App* app, Flags& f) {
  app->add_option("--config", f.config, "Experiment config (JSON)");
  app->add_option("--seed", f.seed, "Random seed");
  app->add_option("--out", f.out, "Output directory");
  app->add_option("--lambda", f.lambda, "Perturbation coefficient for train");
  app->add_option("--beam", f.beam, "Beam size");
  app->add_option("--beta", f.beta, "Sampling temperature");
  app->add_option("--scorer", f.scorer, "softmax or dual");
  app->add_option("--rule", f.rule, "greedy, sample, beam or map");
  app->add_option("--checkpoint", f.checkpoint, "Model checkpoint");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Q-value decoding and MABE training laboratory"};
  app.require_subcommand(1);
  Flags flags;
  const std::pair<const char*, Command> commands[] = {
      {"train", cmd_train},       {"decode", cmd_decode},     {"sweep", cmd_sweep},
      {"theorem", cmd_theorem},   {"gradcheck", cmd_gradcheck}, {"evaluate", cmd_evaluate}};
  std::map<CLI::App*, std::pair<std::string, Command>> handlers;
  for (const auto& [name, cmd] : commands) {
    CLI::App* sub = app.add_subcommand(name, std::string("Run ") + name);
    add_common(sub, flags);
    handlers[sub] = {name, cmd};
  }
  std::string report_dir;
  CLI::App* report = app.add_subcommand("report", "Render charts and a summary for a run");
  report->add_option("--out", report_dir, "Run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, e2;
    const int code = app.exit(e, o, e2);
    out << o.str();
    err << e2.str();
    return code == 0 ? kExitOk : kExitBadConfig;
  }
  if (report->parsed()) {
    try {
      return cmd_report(report_dir, out, err);
    } catch (const std::exception& e) {
      err << "report: " << e.what() << "\n";
      return kExitFailure;
    }
  }
  for (const auto& [sub, h] : handlers) {
    if (sub->parsed()) return execute(h.first, h.second, flags, out, err);
  }
  return kExitBadConfig;
}

}  // namespace mabe
