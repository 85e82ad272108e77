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
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rareval/datamodel.hpp"

namespace rareval {

// Unweighted cell tallies of one stratum together with its case weight.
// Kept alongside weighted counts so that interval estimation can resample
// cases within strata without going back to the dataset.
struct StratumCells {
  std::string stratum_id;
  double weight = 1.0;
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;

  std::uint64_t total() const { return tp + fp + fn + tn; }
  bool operator==(const StratumCells&) const = default;
};

struct ConfusionCounts {
  double tp = 0, fp = 0, fn = 0, tn = 0;
  bool weighted = false;
  std::vector<StratumCells> strata;  // populated by confusion() for weighted designs

  double total() const { return tp + fp + fn + tn; }
  ConfusionCounts scaled(double factor) const;
};

enum class Metric { kRecall, kPrecision, kSpecificity, kNpv };

std::string_view to_string(Metric metric);
Metric parse_metric(std::string_view name);

// A proportion estimate. `value` is empty when the denominator is zero;
// callers never see a silent 0 or NaN.
struct MetricEstimate {
  std::string metric;
  std::optional<double> value;
  std::optional<double> ci_low;
  std::optional<double> ci_high;
  double ci_level = 0.95;
  double n_effective = 0.0;
  bool weighted = false;
  std::string interval_method;  // "wilson", "bootstrap_percentile" or "none"

  bool defined() const { return value.has_value(); }
};

struct IntervalOptions {
  double ci_level = 0.95;
  int bootstrap_resamples = 2000;
  std::uint64_t seed = 0;
};

// Tallies TP/FP/FN/TN over Positive and Negative cases. Under a design each
// case contributes 1 / inclusion_probability (Horvitz-Thompson style).
ConfusionCounts confusion(const Dataset& dataset);

// Unweighted counts get a Wilson score interval. Weighted counts get a case
// bootstrap over the pooled sample with a percentile interval; resampling
// cases with replacement is done by drawing the multinomial (stratum, cell)
// counts directly, which has the same distribution.
MetricEstimate estimate(Metric metric, const ConfusionCounts& counts,
                        const IntervalOptions& options = {});

MetricEstimate recall(const ConfusionCounts& counts, const IntervalOptions& options = {});
MetricEstimate precision(const ConfusionCounts& counts, const IntervalOptions& options = {});
MetricEstimate specificity(const ConfusionCounts& counts, const IntervalOptions& options = {});
MetricEstimate npv(const ConfusionCounts& counts, const IntervalOptions& options = {});

// Numerator and denominator of a metric for the given counts.
std::pair<double, double> metric_ratio(Metric metric, const ConfusionCounts& counts);
std::optional<double> metric_value(Metric metric, const ConfusionCounts& counts);

struct Interval {
  double low = 0.0;
  double high = 0.0;
};
Interval wilson_interval(double successes, double trials, double ci_level = 0.95);

// (1 + b^2) p r / (b^2 p + r). Empty when p = r = 0; 0 when exactly one
// of p and r is 0.
std::optional<double> f_beta(double precision, double recall, double beta = 1.0);

// Precision projected to an assumed prevalence by Bayes' theorem:
// se * pi / (se * pi + (1 - sp) * (1 - pi)). Empty if the denominator is 0.
std::optional<double> bayes_adjusted_precision(double sensitivity, double specificity,
                                               double prevalence);

struct PrecisionAtK {
  MetricEstimate estimate;
  std::size_t k = 0;
  std::size_t ambiguous_in_top_k = 0;
  bool ties_straddle_cut = false;  // the k-th and (k+1)-th scores are equal
  double cutoff_score = 0.0;
};

// Precision over the k highest-scored non-excluded cases. Ties are broken
// by case_id (ascending) so the result is deterministic. Ambiguous cases in
// the top k are dropped from numerator and denominator and counted.
// Always unweighted: a review budget is a count of cases.
PrecisionAtK precision_at_k(const Dataset& dataset, std::size_t k, double ci_level = 0.95);

struct Concordance {
  double concordance = 0.0;
  double override_rate = 0.0;
  std::size_t n = 0;
};

// Agreement between human final decisions and model predictions.
Concordance concordance_and_override(const Dataset& dataset,
                                     const std::map<std::string, bool>& human_labels);

}  // namespace rareval
