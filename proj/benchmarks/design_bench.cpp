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

#include "rareval/design.hpp"

namespace {

void BM_SimulatePower(benchmark::State& state) {
  rareval::PrecisionStudyAssumptions a;
  a.sample_size = static_cast<std::uint64_t>(state.range(0));
  a.flag_rate_a = a.flag_rate_b = 0.01;
  a.overlap_rate = 0.3;
  a.precision_a = 0.8;
  a.precision_b = 0.88;
  a.n_replicates = 1000;
  for (auto _ : state) benchmark::DoNotOptimize(rareval::simulate_precision_power(a));
}
BENCHMARK(BM_SimulatePower)->Arg(3'000)->Arg(30'000)->Unit(benchmark::kMillisecond);

void BM_DisagreementTest(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(rareval::disagreement_test_p_value(200, 150, 210, 180));
}
BENCHMARK(BM_DisagreementTest);

void BM_PairedPrecisionTest(benchmark::State& state) {
  const std::size_t n = 1'000'000;
  auto a = [](std::size_t i) { return i % 97 == 0; };
  auto b = [](std::size_t i) { return i % 89 == 0; };
  for (auto _ : state) benchmark::DoNotOptimize(rareval::build_paired_precision_test(n, a, b, 200, 1));
}
BENCHMARK(BM_PairedPrecisionTest)->Unit(benchmark::kMillisecond);

}  // namespace
