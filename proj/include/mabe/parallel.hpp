// Copyright 2026 The mabe-lab Authors
// SPDX-License-Identifier: Apache-2.0

// OpenMP kernels and their serial references.
//
// Each parallel kernel writes per-item results into index-addressed slots
// and merges them in index order afterwards, so it is bit-identical to its
// `_serial` twin regardless of thread count or scheduling.

#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <optional>
#include <span>
#include <type_traits>
#include <vector>

#include "mabe/core_math.hpp"
#include "mabe/qmodel.hpp"
#include "mabe/tasks.hpp"

namespace mabe {

/// Worker cap: the MABE_MAX_WORKERS environment variable when set to a
/// positive integer, else the OpenMP default.
int worker_count();

/// Coefficients for step t of a labelled pair, given the step's Q-values and
/// the demonstrated token.
using CoefficientFn = std::function<StepCoefficients(const QValues&, Token)>;

/// Adds sum_t sum_a g_a dQ_a/dw for every step of one pair into `buf`.
void pair_gradient(const QModel& model, const LabeledPair& pair, const CoefficientFn& coeffs,
                   GradientBuffer& buf);

struct BatchGradient {
  GradientBuffer sum;
  /// Lowest index of a pair whose gradient contains a non-finite entry.
  std::optional<std::size_t> nonfinite_pair;
};

/// Sum of per-pair gradients, one buffer per pair, merged by pair index.
BatchGradient batch_gradient(const QModel& model, std::span<const LabeledPair> batch,
                             const CoefficientFn& coeffs);
BatchGradient batch_gradient_serial(const QModel& model, std::span<const LabeledPair> batch,
                                    const CoefficientFn& coeffs);

namespace detail {
void run_indexed(std::size_t n, const std::function<void(std::size_t)>& body);
}

/// out[i] = fn(i) for i in [0, n), evaluated by the OpenMP worker pool.
/// If any call throws, the exception of the lowest failing index is rethrown.
template <class Fn>
auto parallel_map(std::size_t n, Fn&& fn) -> std::vector<std::invoke_result_t<Fn&, std::size_t>> {
  using R = std::invoke_result_t<Fn&, std::size_t>;
  std::vector<std::optional<R>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  detail::run_indexed(n, [&](std::size_t i) {
    try {
      slots[i].emplace(fn(i));
    } catch (...) {
      errors[i] = std::current_exception();
    }
  });
  std::vector<R> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (errors[i]) std::rethrow_exception(errors[i]);
    out.push_back(std::move(*slots[i]));
  }
  return out;
}

template <class Fn>
auto serial_map(std::size_t n, Fn&& fn) -> std::vector<std::invoke_result_t<Fn&, std::size_t>> {
  std::vector<std::invoke_result_t<Fn&, std::size_t>> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(fn(i));
  return out;
}

}  // namespace mabe
