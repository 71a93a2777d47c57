// Copyright 2026 The mabe-lab Authors
// SPDX-License-Identifier: Apache-2.0

// Experiment configuration. The on-disk form is JSON; docs/config_schema.md
// lists every field and its default. Parsing rejects unknown fields and
// reports problems as ParseError with a dotted field path.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mabe/analysis.hpp"
#include "mabe/qmodel.hpp"
#include "mabe/tasks.hpp"
#include "mabe/training.hpp"

namespace mabe {

struct TaskConfig {
  std::string kind = "noisy_copy";
  int vocab_size = 5;
  std::vector<double> probs;  // bandit
  int length = 3;             // noisy_copy
  double eps = 0.1;           // noisy_copy
  int input_length = 2;       // synonym
  int phrases_per_token = 2;  // synonym
  int max_phrase_len = 2;     // synonym
  double truncation_prob = 0.0;
  std::uint64_t table_seed = 0;  // synonym phrase table
};

struct ModelConfig {
  std::string family = "tabular";
  int context_order = 1;
  int embed_dim = 4;
  int hidden_dim = 8;
};

struct DecodeConfig {
  std::vector<RuleKind> rules{RuleKind::kGreedy, RuleKind::kSample, RuleKind::kBeam,
                              RuleKind::kMap};
  std::vector<Scorer> scorers{Scorer::kSoftmax, Scorer::kDual};
  std::vector<double> betas{1.0};
  std::vector<std::size_t> beams{1, 2, 4};
  std::size_t instances = 20;
};

struct EvalConfig {
  std::size_t instances = 100;
  Similarity similarity = Similarity::kExactMatch;
};

struct SweepConfig {
  std::vector<double> lambdas{-2.0, -1.0, 0.0, 1.0, 2.0};
};

struct TheoremConfig {
  std::vector<std::vector<double>> targets{{1.0, 0.0}, {0.7, 0.3, 0.0}};
  std::size_t random_instances = 50;
  int max_d = 16;
  FixedPointConfig solver;
  LandscapeGrid grid;
};

struct GradcheckConfig {
  double h = 1e-5;
  int batch_size = 8;
  double tolerance = 1e-4;
};

struct ExperimentConfig {
  TaskConfig task;
  ModelConfig model;
  TrainConfig train;
  int checkpoint_every = 0;  // 0 keeps only the final checkpoint
  DecodeConfig decode;
  EvalConfig eval;
  SweepConfig sweep;
  TheoremConfig theorem;
  GradcheckConfig gradcheck;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> checkpoint;
};

/// Parses and validates a JSON document. Fields that are absent take their
/// defaults; the optimizer defaults depend on the model family.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

/// Canonical JSON of the resolved configuration (sorted keys).
std::string config_to_json(const ExperimentConfig& config);

/// Re-validates after command-line overrides.
void validate(const ExperimentConfig& config);

SyntheticTask make_task(const TaskConfig& config);
ModelFamily make_family(const ModelConfig& config);
EvalSuite make_suite(const DecodeConfig& decode, Similarity similarity);

}  // namespace mabe
