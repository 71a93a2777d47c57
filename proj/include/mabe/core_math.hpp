// Copyright 2026 The mabe-lab Authors
// SPDX-License-Identifier: Apache-2.0

// Per-step numerical kernels shared by training, decoding and analysis.
//
// Everything here is a pure function of its inputs. Probabilities live in the
// natural-log domain; an exact zero is probability 0.0 with log-probability
// -inf, never an epsilon floor.
//
// The three gradient-coefficient operations return the vector g such that
//   sum_a g_a * dQ_a/dw
// is the per-step contribution to the corresponding gradient. Backpropagating
// g through any Q-model (qmodel.hpp: accumulate_gradient) therefore yields the
// MLE gradient, the covariance perturbation, or the MABE(lambda) update with a
// single primitive.

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mabe/error.hpp"

namespace mabe {

using Token = int;

/// Utilities (logits) for one decision step. Length >= 2, every entry finite.
class QValues {
 public:
  explicit QValues(std::vector<double> values);

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t a) const noexcept { return values_[a]; }
  std::span<const double> values() const noexcept { return values_; }
  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

 private:
  std::vector<double> values_;
};

/// Normalized distribution over d tokens with its natural-log companion.
struct TokenDistribution {
  std::vector<double> probs;
  std::vector<double> log_probs;

  std::size_t size() const noexcept { return probs.size(); }

  /// Builds log_probs from probs; zero entries map to -inf.
  static TokenDistribution from_probs(std::vector<double> probs);
};

/// Weights on dQ_a/dw contributed by one decision step.
struct StepCoefficients {
  std::vector<double> g;

  std::size_t size() const noexcept { return g.size(); }
};

/// Details of the dual-probability transform.
struct DualTransform {
  TokenDistribution dist;
  /// Unclipped scaling factors 1 + q_a - E_p[Q].
  std::vector<double> factors;
  /// Sum of the clipped numerators. Always > 0.
  double normalizer = 0.0;
  /// True when some p_a * factor_a exceeded 1 and the upper clip engaged.
  bool upper_clip_bound = false;
};

/// log sum_a exp(q_a), max-shifted.
double log_sum_exp(const QValues& q);

TokenDistribution softmax(const QValues& q);

/// sum_a p_a q_a. Throws InvalidArgument on length mismatch.
double expected_q(const TokenDistribution& p, const QValues& q);

/// p_a (1 + q_a - E_p[Q]) with p = softmax(q), clipped to [0, 1], normalized.
DualTransform dual_transform(const QValues& q);
TokenDistribution dual_distribution(const QValues& q);

/// 1{a=y} - p_a: the log-likelihood gradient of one step.
StepCoefficients mle_coefficients(const QValues& q, Token y);

/// ((1-s) 1{a=y} + s/d) - p_a: label-smoothed log-likelihood gradient.
StepCoefficients smoothed_mle_coefficients(const QValues& q, Token y, double smoothing);

/// p_a (q_a - E_p[Q]): the covariance between Q(A) and dQ(A)/dw under A ~ p,
/// expressed as coefficients on dQ_a/dw. The centering term of the full
/// covariance vanishes because sum_a p_a (q_a - E_p[Q]) = 0.
StepCoefficients cov_coefficients(const QValues& q);

/// mle - (1 - lambda) cov. lambda = 1 is MLE, lambda = 0 is the unbiased
/// J_MABE gradient.
StepCoefficients mabe_coefficients(const QValues& q, Token y, double lambda);

/// softmax(q / beta) for beta > 0; one-hot at argmax q for beta = 0.
TokenDistribution temperature_rescale(const QValues& q, double beta);

/// p^(1/beta) renormalized (beta > 0), one-hot at argmax p for beta = 0.
/// Zero entries stay zero.
TokenDistribution power_rescale(const TokenDistribution& p, double beta);

/// Index of the largest entry, ties to the lowest index.
std::size_t argmax(std::span<const double> v);

}  // namespace mabe
