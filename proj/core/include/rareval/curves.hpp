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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rareval/datamodel.hpp"

namespace rareval {

struct CurvePoint {
  double threshold = 0.0;  // predicted positive iff score >= threshold
  double recall = 0.0;
  std::optional<double> precision;  // empty when nothing is predicted positive
  double specificity = 1.0;
  double fpr = 0.0;
  std::size_t predicted_positive_count = 0;
};

using Curve = std::vector<CurvePoint>;

// Threshold sweep over the distinct observed scores of Positive and
// Negative cases, ordered by strictly decreasing threshold. The first point
// (threshold +inf) is the all-negative extreme; the last point (threshold =
// lowest score) is the all-positive extreme. No interpolation. Weighted
// counts are used when the dataset carries a design.
Curve threshold_sweep(const Dataset& dataset);
Curve pr_curve(const Dataset& dataset);
Curve roc_curve(const Dataset& dataset);

// Trapezoidal area under (fpr, recall).
double auc(std::span<const CurvePoint> curve);
// Area under (fpr, recall) restricted to fpr in [0, max_fpr].
double partial_auc(std::span<const CurvePoint> curve, double max_fpr);

struct CostSpec {
  double cost_fp = 1.0;
  double cost_fn = 1.0;
};
void validate(const CostSpec& costs);

// Expected cost per case at deployment prevalence:
// cost_fn * pi * (1 - recall) + cost_fp * (1 - pi) * fpr.
double expected_cost(const CurvePoint& point, const CostSpec& costs, double assumed_prevalence);

// Point of minimal expected cost; ties go to the lower fpr, then to the
// earlier (higher-threshold) point.
CurvePoint select_operating_point(std::span<const CurvePoint> curve, const CostSpec& costs,
                                  double assumed_prevalence);

struct Warning {
  std::string code;
  std::string message;
  double observed = 0.0;
  double limit = 0.0;
};

struct WarningConfig {
  double auc_prevalence_floor = 0.01;
  double enrichment_ratio_limit = 10.0;
};

struct WarningRequest {
  bool auc_reported = false;
  bool f1_reported = false;
  bool cost_justified = false;
  // Unweighted prevalence of positives in the test set. When empty it is
  // read from the all-positive end of the curve.
  std::optional<double> test_set_prevalence;
};

inline constexpr const char* kWarnAucRareEvent = "W001_AUC_RARE_EVENT";
inline constexpr const char* kWarnEnrichment = "W002_ENRICHMENT_OPTIMISM";
inline constexpr const char* kWarnF1NoCost = "W003_F1_WITHOUT_COST_JUSTIFICATION";

std::vector<Warning> rare_event_warnings(std::span<const CurvePoint> curve,
                                         double assumed_prevalence,
                                         const WarningRequest& request = {},
                                         const WarningConfig& config = {});

}  // namespace rareval
