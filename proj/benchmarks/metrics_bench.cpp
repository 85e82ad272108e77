// Copyright 2026 The rareval Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <benchmark/benchmark.h>

#include "rareval/metrics.hpp"
#include "rareval/synth.hpp"

namespace {

rareval::Dataset population(std::int64_t n, bool enriched) {
  rareval::synth::PopulationSpec spec;
  spec.n = static_cast<std::uint64_t>(n);
  spec.prevalence = 0.01;
  spec.seed = 1;
  if (enriched) spec.enrichment = {{rareval::synth::Selector::kNegative, 0.05}};
  return rareval::synth::generate(spec).dataset;
}

void BM_Confusion(benchmark::State& state) {
  const rareval::Dataset ds = population(state.range(0), false);
  for (auto _ : state) benchmark::DoNotOptimize(rareval::confusion(ds));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Confusion)->Arg(10'000)->Arg(1'000'000);

void BM_WilsonPrecision(benchmark::State& state) {
  const rareval::ConfusionCounts c = rareval::confusion(population(100'000, false));
  for (auto _ : state) benchmark::DoNotOptimize(rareval::precision(c));
}
BENCHMARK(BM_WilsonPrecision);

void BM_WeightedBootstrapPrecision(benchmark::State& state) {
  const rareval::ConfusionCounts c = rareval::confusion(population(400'000, true));
  const rareval::IntervalOptions options{0.95, static_cast<int>(state.range(0)), 3};
  for (auto _ : state) benchmark::DoNotOptimize(rareval::precision(c, options));
}
BENCHMARK(BM_WeightedBootstrapPrecision)->Arg(500)->Arg(2000);

void BM_PrecisionAtK(benchmark::State& state) {
  const rareval::Dataset ds = population(state.range(0), false);
  for (auto _ : state) benchmark::DoNotOptimize(rareval::precision_at_k(ds, 100));
}
BENCHMARK(BM_PrecisionAtK)->Arg(10'000)->Arg(263'451);

}  // namespace
