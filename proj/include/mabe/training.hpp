// Copyright 2026 The mabe-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mabe/parallel.hpp"
#include "mabe/qmodel.hpp"
#include "mabe/tasks.hpp"

namespace mabe {

enum class OptimizerKind { kSgd, kMomentum, kAdam };

std::string optimizer_tag(OptimizerKind k);
OptimizerKind optimizer_from_tag(const std::string& tag);

struct OptimizerSpec {
  OptimizerKind kind = OptimizerKind::kAdam;
  double lr = 1e-2;
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Toy defaults: Adam(1e-2) for tabular/linear, Adam(1e-3) for the hidden
/// layer family.
OptimizerSpec default_optimizer(FamilyKind family);

struct TrainConfig {
  double lambda = 1.0;
  OptimizerSpec optimizer;
  int batch_size = 32;
  int steps = 1000;
  std::uint64_t seed = 0;
  double label_smoothing = 0.0;  // only with lambda = 1
  int eval_every = 100;
  int probe_size = 64;
  /// Stop once every coordinate of the batch gradient is below this.
  double convergence_tol = 1e-8;
};

/// Throws ParseError with a "train.<field>" path on the first violation.
void validate(const TrainConfig& config);

struct TrainLogRow {
  int step = 0;
  double j_data = 0.0;
  double j_seq = 0.0;
  double j_token = 0.0;
  double j_mabe = 0.0;
  double grad_norm = 0.0;
  double greedy_exact_match = 0.0;
  double wall_ms = 0.0;
};

struct TrainResult {
  QModel model;
  std::vector<TrainLogRow> log;
  int steps_run = 0;
  bool converged = false;
};

class TrainingError : public Error {
 public:
  TrainingError(int step, std::size_t pair, const std::string& what)
      : Error("step " + std::to_string(step) + ", pair " + std::to_string(pair) + ": " + what),
        step_(step),
        pair_(pair) {}
  int step() const noexcept { return step_; }
  std::size_t pair() const noexcept { return pair_; }

 private:
  int step_;
  std::size_t pair_;
};

/// Ascent-direction optimizer state.
class Optimizer {
 public:
  Optimizer(OptimizerSpec spec, std::size_t n);
  /// w += update(g) for an ascent direction g.
  void step(std::span<double> w, std::span<const double> g);

 private:
  OptimizerSpec spec_;
  std::vector<double> m_;
  std::vector<double> v_;
  long t_ = 0;
};

/// Called after every optimizer step with (step index, current model).
using StepObserver = std::function<void(int, const QModel&)>;

/// The MABE(lambda) trainer. Each step draws `batch_size` pairs from
/// CounterRng(seed, 1), backpropagates mabe_coefficients(q_t, y_t, lambda) at
/// the current weights for every decision step, averages over the batch and
/// applies one ascent step. lambda = 1 is MLE. The probe set for greedy
/// exact-match comes from CounterRng(seed, 2).
TrainResult mabe_train(QModel model, const SyntheticTask& task, const TrainConfig& config,
                       const StepObserver& observer = {});

/// Coefficient rule used by mabe_train for a config (handles smoothing).
CoefficientFn training_coefficients(const TrainConfig& config);

struct LikelihoodObjectives {
  double j_data = 0.0;   // sum of token log-probs
  double j_seq = 0.0;    // j_data / n
  double j_token = 0.0;  // j_data / sum_i T_i
};

LikelihoodObjectives eval_log_likelihood(const QModel& model, std::span<const LabeledPair> batch);

/// sum_t (Q(y_t) - E_softmax[Q]) averaged over the sequences of the batch.
double eval_j_mabe(const QModel& model, std::span<const LabeledPair> batch);

/// Fraction of probe pairs whose greedy output equals the reference output.
double greedy_exact_match(const QModel& model, const SyntheticTask& task,
                          std::span<const LabeledPair> probe);

}  // namespace mabe
