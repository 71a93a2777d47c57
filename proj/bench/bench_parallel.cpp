// Copyright 2026 The mabe-lab Authors
// SPDX-License-Identifier: Apache-2.0

// Serial reference kernels against their OpenMP counterparts. Set
// MABE_MAX_WORKERS to pin the worker count.

#include <benchmark/benchmark.h>

#include "mabe/decoding.hpp"
#include "mabe/parallel.hpp"
#include "mabe/training.hpp"

namespace {

using namespace mabe;

struct Workload {
  QModel model;
  SyntheticTask task;
  std::vector<LabeledPair> batch;
};

Workload make_workload(std::size_t pairs) {
  SyntheticTask task(make_synonym_spec(8, 3, 2, 2, 0.1, 1));
  QModel model = init_model(ModelFamily::one_hidden_layer(8, 32, 2), 8, 1);
  CounterRng rng(1, 1);
  std::vector<LabeledPair> batch;
  for (std::size_t i = 0; i < pairs; ++i) batch.push_back(sample_pair(task, rng));
  return {std::move(model), std::move(task), std::move(batch)};
}

const CoefficientFn kCoeffs = [](const QValues& q, Token y) {
  return mabe_coefficients(q, y, 0.0);
};

void BM_BatchGradientSerial(benchmark::State& state) {
  const Workload w = make_workload(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(batch_gradient_serial(w.model, w.batch, kCoeffs));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_BatchGradientParallel(benchmark::State& state) {
  const Workload w = make_workload(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(batch_gradient(w.model, w.batch, kCoeffs));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool kParallel>
void BM_BeamDecode(benchmark::State& state) {
  const Workload w = make_workload(static_cast<std::size_t>(state.range(0)));
  const LengthRule rule = w.task.length_rule();
  auto decode = [&](std::size_t i) {
    return beam_search(w.model, w.batch[i].x, Scorer::kSoftmax, 4, rule).total_log_prob;
  };
  for (auto _ : state) {
    if constexpr (kParallel) {
      benchmark::DoNotOptimize(parallel_map(w.batch.size(), decode));
    } else {
      benchmark::DoNotOptimize(serial_map(w.batch.size(), decode));
    }
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

BENCHMARK(BM_BatchGradientSerial)->Arg(64)->Arg(512)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BatchGradientParallel)->Arg(64)->Arg(512)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BeamDecode<false>)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BeamDecode<true>)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
