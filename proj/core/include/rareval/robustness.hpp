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
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rareval/datamodel.hpp"
#include "rareval/metrics.hpp"

namespace rareval {

struct CategoryReport {
  std::string category;
  std::size_t n = 0;  // evaluable cases in the category
  ConfusionCounts counts;
  std::vector<MetricEstimate> estimates;  // in the order metrics were requested
};

// Screen for errors clustering in some categories. The p-value is always
// reported together with the name of the test that produced it.
struct HeterogeneityScreen {
  std::string test;  // "chi_squared", "monte_carlo_permutation" or "none"
  double statistic = 0.0;
  std::optional<double> p_value;
  std::size_t degrees_of_freedom = 0;
  std::size_t permutations = 0;
  double alpha = 0.05;
  bool flagged = false;
};

struct SubsetReport {
  std::string attribute;
  std::vector<Metric> metrics;
  std::vector<CategoryReport> categories;  // sorted by category name
  std::size_t total_n = 0;
  HeterogeneityScreen heterogeneity;
};

struct SubsetOptions {
  IntervalOptions intervals;
  double alpha = 0.05;
  std::size_t permutations = 2000;
  std::uint64_t seed = 0;
};

// Cases lacking the attribute form the "unknown" category. Heterogeneity
// is screened with a chi-squared test on the error x category table; when
// any expected cell is below 5 a Monte Carlo permutation p-value replaces
// the asymptotic one. Disparities are reported, never judged.
SubsetReport subset_metrics(const Dataset& dataset, std::string_view attribute,
                            const std::vector<Metric>& metrics, const SubsetOptions& options = {});

struct StabilityReport {
  std::size_t n_runs = 0;
  std::size_t n_cases = 0;
  double unanimity_rate = 0.0;
  double pairwise_agreement = 0.0;
  // Size of the minority label per case: 0 for unanimous cases.
  std::vector<std::pair<std::string, std::size_t>> flips;
};

StabilityReport stability(const Dataset& dataset);

enum class ResamplingScheme { kBootstrap, kKFold };
std::string_view to_string(ResamplingScheme scheme);
ResamplingScheme parse_resampling_scheme(std::string_view text);

// Resamples the evaluation set, not the training data: the spread shows how
// much the estimate moves with the test cases drawn, which says nothing
// about variability from retraining the model.
struct ResamplingSummary {
  std::string metric;
  ResamplingScheme scheme = ResamplingScheme::kBootstrap;
  std::size_t resamples = 0;
  std::uint64_t seed = 0;
  std::optional<double> point_estimate;
  std::vector<std::optional<double>> values;  // empty when undefined in that resample
  std::size_t undefined = 0;
  std::optional<double> mean;
  std::optional<double> standard_deviation;
  std::optional<double> ci_low;
  std::optional<double> ci_high;
  double ci_level = 0.95;
};

// Bootstrap: `n` stratified case resamples. k_fold: the evaluable cases are
// shuffled into `n` folds and the metric is computed on each fold.
ResamplingSummary resampling_variability(const Dataset& dataset, Metric metric,
                                         ResamplingScheme scheme, std::size_t n,
                                         std::uint64_t seed, double ci_level = 0.95);

std::string to_json(const SubsetReport& report);
std::string to_json(const StabilityReport& report);
std::string to_json(const ResamplingSummary& summary);

}  // namespace rareval
