// Copyright 2026 The mabe-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "mabe/training.hpp"

#include <chrono>
#include <cmath>

#include "mabe/decoding.hpp"

namespace mabe {
namespace {

void check(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ParseError("train." + field, what);
}

std::vector<LabeledPair> draw(const SyntheticTask& task, CounterRng& rng, int n) {
  std::vector<LabeledPair> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out.push_back(sample_pair(task, rng));
  return out;
}

}  // namespace

std::string optimizer_tag(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::kSgd: return "sgd";
    case OptimizerKind::kMomentum: return "momentum";
    case OptimizerKind::kAdam: return "adam";
  }
  return "unknown";
}

OptimizerKind optimizer_from_tag(const std::string& tag) {
  if (tag == "sgd") return OptimizerKind::kSgd;
  if (tag == "momentum") return OptimizerKind::kMomentum;
  if (tag == "adam") return OptimizerKind::kAdam;
  throw InvalidArgument("unknown optimizer '" + tag + "' (expected sgd, momentum or adam)");
}

OptimizerSpec default_optimizer(FamilyKind family) {
  OptimizerSpec spec;
  spec.kind = OptimizerKind::kAdam;
  spec.lr = family == FamilyKind::kOneHiddenLayer ? 1e-3 : 1e-2;
  return spec;
}

void validate(const TrainConfig& c) {
  check(std::isfinite(c.lambda), "lambda", "must be finite");
  check(c.optimizer.lr > 0.0 && std::isfinite(c.optimizer.lr), "optimizer.lr", "must be > 0");
  check(c.optimizer.momentum >= 0.0 && c.optimizer.momentum < 1.0, "optimizer.momentum",
        "must lie in [0, 1)");
  check(c.optimizer.beta1 >= 0.0 && c.optimizer.beta1 < 1.0, "optimizer.beta1",
        "must lie in [0, 1)");
  check(c.optimizer.beta2 >= 0.0 && c.optimizer.beta2 < 1.0, "optimizer.beta2",
        "must lie in [0, 1)");
  check(c.optimizer.epsilon > 0.0, "optimizer.epsilon", "must be > 0");
  check(c.batch_size > 0, "batch_size", "must be a positive integer");
  check(c.steps > 0, "steps", "must be a positive integer");
  check(c.label_smoothing >= 0.0 && c.label_smoothing < 1.0, "label_smoothing",
        "must lie in [0, 1)");
  check(c.label_smoothing == 0.0 || c.lambda == 1.0, "label_smoothing",
        "label smoothing is only defined for lambda = 1 (MLE)");
  check(c.eval_every > 0, "eval_every", "must be a positive integer");
  check(c.probe_size >= 0, "probe_size", "must be >= 0");
  check(c.convergence_tol >= 0.0, "convergence_tol", "must be >= 0");
}

Optimizer::Optimizer(OptimizerSpec spec, std::size_t n) : spec_(spec), m_(n, 0.0), v_(n, 0.0) {}

void Optimizer::step(std::span<double> w, std::span<const double> g) {
  ++t_;
  switch (spec_.kind) {
    case OptimizerKind::kSgd:
      for (std::size_t i = 0; i < w.size(); ++i) w[i] += spec_.lr * g[i];
      return;
    case OptimizerKind::kMomentum:
      for (std::size_t i = 0; i < w.size(); ++i) {
        m_[i] = spec_.momentum * m_[i] + g[i];
        w[i] += spec_.lr * m_[i];
      }
      return;
    case OptimizerKind::kAdam: {
      const double c1 = 1.0 - std::pow(spec_.beta1, static_cast<double>(t_));
      const double c2 = 1.0 - std::pow(spec_.beta2, static_cast<double>(t_));
      for (std::size_t i = 0; i < w.size(); ++i) {
        m_[i] = spec_.beta1 * m_[i] + (1.0 - spec_.beta1) * g[i];
        v_[i] = spec_.beta2 * v_[i] + (1.0 - spec_.beta2) * g[i] * g[i];
        w[i] += spec_.lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + spec_.epsilon);
      }
      return;
    }
  }
}

CoefficientFn training_coefficients(const TrainConfig& config) {
  if (config.label_smoothing > 0.0) {
    const double s = config.label_smoothing;
    return [s](const QValues& q, Token y) { return smoothed_mle_coefficients(q, y, s); };
  }
  const double lambda = config.lambda;
  return [lambda](const QValues& q, Token y) { return mabe_coefficients(q, y, lambda); };
}

LikelihoodObjectives eval_log_likelihood(const QModel& model, std::span<const LabeledPair> batch) {
  if (batch.empty()) throw InvalidArgument("eval_log_likelihood: empty batch");
  LikelihoodObjectives out;
  std::size_t tokens = 0;
  for (const LabeledPair& pair : batch) {
    const std::span<const Token> y(pair.y);
    for (std::size_t t = 0; t < y.size(); ++t) {
      const QValues q = q_values(model, {pair.x, y.first(t)});
      out.j_data += q[y[t]] - log_sum_exp(q);
    }
    tokens += y.size();
  }
  out.j_seq = out.j_data / static_cast<double>(batch.size());
  out.j_token = out.j_data / static_cast<double>(tokens);
  return out;
}

double eval_j_mabe(const QModel& model, std::span<const LabeledPair> batch) {
  if (batch.empty()) throw InvalidArgument("eval_j_mabe: empty batch");
  double total = 0.0;
  for (const LabeledPair& pair : batch) {
    const std::span<const Token> y(pair.y);
    for (std::size_t t = 0; t < y.size(); ++t) {
      const QValues q = q_values(model, {pair.x, y.first(t)});
      total += q[y[t]] - expected_q(softmax(q), q);
    }
  }
  return total / static_cast<double>(batch.size());
}

double greedy_exact_match(const QModel& model, const SyntheticTask& task,
                          std::span<const LabeledPair> probe) {
  if (probe.empty()) return 0.0;
  std::size_t hits = 0;
  for (const LabeledPair& pair : probe) {
    if (greedy_decode(model, pair.x, task.length_rule()).tokens == pair.y) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(probe.size());
}

TrainResult mabe_train(QModel model, const SyntheticTask& task, const TrainConfig& config,
                       const StepObserver& observer) {
  validate(config);
  if (model.vocab_size() != task.vocab_size()) {
    throw InvalidArgument("model vocabulary (" + std::to_string(model.vocab_size()) +
                          ") does not match task vocabulary (" +
                          std::to_string(task.vocab_size()) + ")");
  }
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();

  CounterRng data_rng(config.seed, 1);
  CounterRng probe_rng(config.seed, 2);
  const std::vector<LabeledPair> probe = draw(task, probe_rng, config.probe_size);
  const CoefficientFn coeffs = training_coefficients(config);
  Optimizer optimizer(config.optimizer, model.size());
  const double inv_batch = 1.0 / static_cast<double>(config.batch_size);

  TrainResult result{model, {}, 0, false};
  for (int step = 0; step < config.steps; ++step) {
    const std::vector<LabeledPair> batch = draw(task, data_rng, config.batch_size);
    BatchGradient grad = batch_gradient(model, batch, coeffs);
    if (grad.nonfinite_pair) {
      throw TrainingError(step, *grad.nonfinite_pair, "non-finite gradient");
    }
    grad.sum.scale(inv_batch);

    double norm2 = 0.0;
    double max_abs = 0.0;
    for (double g : grad.sum.grads) {
      norm2 += g * g;
      max_abs = std::max(max_abs, std::abs(g));
    }
    const bool converged = max_abs < config.convergence_tol;
    const bool last = step + 1 == config.steps || converged;

    if (step % config.eval_every == 0 || last) {
      const LikelihoodObjectives ll = eval_log_likelihood(model, batch);
      TrainLogRow row;
      row.step = step;
      row.j_data = ll.j_data;
      row.j_seq = ll.j_seq;
      row.j_token = ll.j_token;
      row.j_mabe = eval_j_mabe(model, batch);
      row.grad_norm = std::sqrt(norm2);
      row.greedy_exact_match = greedy_exact_match(model, task, probe);
      row.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
      result.log.push_back(row);
    }
    result.steps_run = step + 1;
    if (converged) {
      result.converged = true;
      break;
    }
    optimizer.step(model.mutable_params(), grad.sum.grads);
    if (observer) observer(step, model);
  }
  result.model = std::move(model);
  return result;
}

}  // namespace mabe
