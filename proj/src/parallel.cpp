// Copyright 2026 The mabe-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "mabe/parallel.hpp"

#include <omp.h>

#include <cmath>
#include <cstdlib>
#include <string>

namespace mabe {

int worker_count() {
  if (const char* env = std::getenv("MABE_MAX_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
  }
  return omp_get_max_threads();
}

namespace detail {

void run_indexed(std::size_t n, const std::function<void(std::size_t)>& body) {
  const auto count = static_cast<long>(n);
#pragma omp parallel for schedule(dynamic) num_threads(worker_count())
  for (long i = 0; i < count; ++i) {
    body(static_cast<std::size_t>(i));
  }
}

}  // namespace detail

void pair_gradient(const QModel& model, const LabeledPair& pair, const CoefficientFn& coeffs,
                   GradientBuffer& buf) {
  const std::span<const Token> y(pair.y);
  for (std::size_t t = 0; t < pair.y.size(); ++t) {
    const DecisionContext ctx{pair.x, y.first(t)};
    const QValues q = q_values(model, ctx);
    accumulate_gradient(model, ctx, coeffs(q, pair.y[t]), buf);
  }
}

namespace {

bool all_finite(const GradientBuffer& b) {
  for (double g : b.grads) {
    if (!std::isfinite(g)) return false;
  }
  return true;
}

BatchGradient merge(const QModel& model, std::vector<GradientBuffer>& per_pair) {
  BatchGradient out{GradientBuffer(model), std::nullopt};
  for (std::size_t i = 0; i < per_pair.size(); ++i) {
    if (!out.nonfinite_pair && !all_finite(per_pair[i])) out.nonfinite_pair = i;
    out.sum += per_pair[i];
  }
  return out;
}

}  // namespace

BatchGradient batch_gradient(const QModel& model, std::span<const LabeledPair> batch,
                             const CoefficientFn& coeffs) {
  auto per_pair = parallel_map(batch.size(), [&](std::size_t i) {
    GradientBuffer buf(model);
    pair_gradient(model, batch[i], coeffs, buf);
    return buf;
  });
  return merge(model, per_pair);
}

BatchGradient batch_gradient_serial(const QModel& model, std::span<const LabeledPair> batch,
                                    const CoefficientFn& coeffs) {
  std::vector<GradientBuffer> per_pair;
  per_pair.reserve(batch.size());
  for (const LabeledPair& pair : batch) {
    GradientBuffer buf(model);
    pair_gradient(model, pair, coeffs, buf);
    per_pair.push_back(std::move(buf));
  }
  return merge(model, per_pair);
}

}  // namespace mabe
