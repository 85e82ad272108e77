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

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rareval/datamodel.hpp"

namespace rareval {

// Assumptions for a two-model precision comparison on one random sample.
// Each sampled case is flagged by model A with probability flag_rate_a and
// by model B with flag_rate_b; a fraction overlap_rate of the larger flag
// set is shared. Shared flags are positive with the flag-weighted mean
// precision; the disagreement cells absorb the rest so that each model's
// marginal precision matches its assumption.
struct PrecisionStudyAssumptions {
  std::uint64_t sample_size = 0;
  double flag_rate_a = 0.0;
  double flag_rate_b = 0.0;
  double overlap_rate = 0.0;
  double precision_a = 0.0;
  double precision_b = 0.0;
  double alpha = 0.05;
  std::uint64_t n_replicates = 2000;
  std::uint64_t seed = 0;
};

// Per-case probabilities of each flag cell and positive rates within them.
struct FlagCellModel {
  double p_both = 0.0, p_a_only = 0.0, p_b_only = 0.0;
  double q_shared = 0.0, q_a_only = 0.0, q_b_only = 0.0;
};

// Validates assumptions and derives the cell model; throws InputError for
// out-of-range values and InfeasibleError when no cell model reproduces the
// stated precisions.
FlagCellModel derive_cell_model(const PrecisionStudyAssumptions& a);

enum class CombinedFlagsMode { kUnion, kSum };
CombinedFlagsMode parse_combined_flags_mode(std::string_view text);

// Equal per-model flag rate implied by an expected number of annotated
// flags, read either as |A u B| or as |A| + |B|.
double flag_rate_from_combined(double combined_flags, std::uint64_t sample_size,
                               double overlap_rate, CombinedFlagsMode mode);

// Two-sided conditional exact test of equal positive rates in the two
// disagreement cells (flagged by A only vs by B only). Conditional on the
// cell sizes and the number of positives, the A-only positives follow a
// hypergeometric law under the null. Returns the mid-p value.
double disagreement_test_p_value(std::uint64_t a_only_flags, std::uint64_t a_only_positive,
                                 std::uint64_t b_only_flags, std::uint64_t b_only_positive);

struct PowerResult {
  double power = 0.0;
  double mc_stderr = 0.0;
  std::uint64_t n_replicates = 0;
  std::uint64_t seed = 0;
};

// Monte Carlo rejection rate of disagreement_test_p_value() < alpha.
PowerResult simulate_precision_power(const PrecisionStudyAssumptions& assumptions);

struct SampleSizeOptions {
  std::uint64_t min_size = 100;
  std::uint64_t max_size = 10'000'000;
};

struct SampleSizeResult {
  std::uint64_t sample_size = 0;
  PowerResult power;
  std::vector<std::pair<std::uint64_t, double>> probes;  // (size, power) in probe order
};

// Smallest size whose simulated power reaches target_power: geometric
// doubling from min_size, then bisection. Each probed size uses a substream
// derived from (seed, size), so the answer does not depend on search path.
// assumptions.sample_size is ignored.
SampleSizeResult solve_sample_size(const PrecisionStudyAssumptions& assumptions,
                                   double target_power, const SampleSizeOptions& options = {});

// Seeded random visiting order used to walk a case universe.
std::vector<std::size_t> walk_order(std::size_t universe_size, std::uint64_t seed);

struct PairedPrecisionTest {
  std::vector<std::size_t> sample_a;  // universe indices, in walk order
  std::vector<std::size_t> sample_b;
  std::vector<std::size_t> shared;    // flagged by both and collected by both
  std::size_t annotation_burden = 0;  // |A u B|
  std::size_t cases_visited = 0;
  bool exhausted = false;
  std::string warning;
};

// Walks ONE seeded order of the universe, collecting flags of each model
// until both have target_flags. Shared flags are annotated once.
PairedPrecisionTest build_paired_precision_test(std::size_t universe_size,
                                                const std::function<bool(std::size_t)>& model_a_flags,
                                                const std::function<bool(std::size_t)>& model_b_flags,
                                                std::size_t target_flags, std::uint64_t seed);

// Model A = `predicted`, model B = `benchmark_predicted` of each case.
PairedPrecisionTest build_paired_precision_test(const Dataset& universe, std::size_t target_flags,
                                                std::uint64_t seed);

struct PairPrevalenceSpec {
  std::uint64_t n_records = 0;
  double duplicate_fraction = 0.0;
};

struct PairPrevalence {
  double prevalence = 0.0;
  std::optional<std::string> warning;
};

// duplicate_fraction * n / n^2: duplicate pairs over all ordered pairs,
// self-pairs included. Warns when duplicate_fraction * n is not an even
// whole number of records.
PairPrevalence pair_prevalence(const PairPrevalenceSpec& spec);

}  // namespace rareval
