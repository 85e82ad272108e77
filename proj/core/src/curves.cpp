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

#include "rareval/curves.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rareval/common.hpp"

namespace rareval {
namespace {

void check_prevalence(double prevalence, const char* where) {
  if (!(prevalence > 0.0 && prevalence < 1.0)) {
    throw InputError(std::string(where) + ": assumed prevalence must be in (0, 1), got " +
                     format_real(prevalence));
  }
}

}  // namespace

Curve threshold_sweep(const Dataset& dataset) {
  struct Scored {
    double score;
    double weight;
    bool positive;
  };
  std::vector<Scored> scored;
  double total_pos = 0.0, total_neg = 0.0;
  for (const EvaluationCase& c : dataset.cases()) {
    if (!is_evaluable(c.reference)) continue;
    if (!c.score) throw InputError("curve: case_id '" + c.case_id + "' has no score");
    const bool positive = c.reference == ReferenceLabel::kPositive;
    const double w = dataset.weight(c);
    scored.push_back({*c.score, w, positive});
    (positive ? total_pos : total_neg) += w;
  }
  if (total_pos <= 0.0) throw InputError("curve: dataset has no Positive cases");
  if (total_neg <= 0.0) throw InputError("curve: dataset has no Negative cases");

  std::sort(scored.begin(), scored.end(),
            [](const Scored& a, const Scored& b) { return a.score > b.score; });

  Curve curve;
  curve.push_back({std::numeric_limits<double>::infinity(), 0.0, std::nullopt, 1.0, 0.0, 0});
  double tp = 0.0, fp = 0.0;
  std::size_t flagged = 0;
  for (std::size_t i = 0; i < scored.size();) {
    const double threshold = scored[i].score;
    for (; i < scored.size() && scored[i].score == threshold; ++i) {
      (scored[i].positive ? tp : fp) += scored[i].weight;
      ++flagged;
    }
    CurvePoint p;
    p.threshold = threshold;
    p.recall = tp / total_pos;
    p.fpr = fp / total_neg;
    p.specificity = 1.0 - p.fpr;
    p.precision = tp / (tp + fp);
    p.predicted_positive_count = flagged;
    curve.push_back(p);
  }
  return curve;
}

Curve pr_curve(const Dataset& dataset) { return threshold_sweep(dataset); }

Curve roc_curve(const Dataset& dataset) { return threshold_sweep(dataset); }

double auc(std::span<const CurvePoint> curve) {
  if (curve.size() < 2) throw InputError("auc: need at least 2 curve points");
  double area = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    area += (curve[i].fpr - curve[i - 1].fpr) * (curve[i].recall + curve[i - 1].recall) / 2.0;
  }
  return std::clamp(area, 0.0, 1.0);
}

double partial_auc(std::span<const CurvePoint> curve, double max_fpr) {
  if (curve.size() < 2) throw InputError("partial_auc: need at least 2 curve points");
  if (!(max_fpr > 0.0 && max_fpr <= 1.0)) {
    throw InputError("partial_auc: max_fpr must be in (0, 1], got " + format_real(max_fpr));
  }
  double area = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    const double x0 = curve[i - 1].fpr, x1 = curve[i].fpr;
    if (x0 >= max_fpr) break;
    const double y0 = curve[i - 1].recall, y1 = curve[i].recall;
    if (x1 <= max_fpr) {
      area += (x1 - x0) * (y0 + y1) / 2.0;
    } else {
      const double y_cut = y0 + (y1 - y0) * (max_fpr - x0) / (x1 - x0);
      area += (max_fpr - x0) * (y0 + y_cut) / 2.0;
      break;
    }
  }
  return area;
}

void validate(const CostSpec& costs) {
  if (!(costs.cost_fp > 0.0) || !std::isfinite(costs.cost_fp)) {
    throw InputError("cost_fp must be a positive number");
  }
  if (!(costs.cost_fn > 0.0) || !std::isfinite(costs.cost_fn)) {
    throw InputError("cost_fn must be a positive number");
  }
}

double expected_cost(const CurvePoint& point, const CostSpec& costs, double assumed_prevalence) {
  return costs.cost_fn * assumed_prevalence * (1.0 - point.recall) +
         costs.cost_fp * (1.0 - assumed_prevalence) * point.fpr;
}

CurvePoint select_operating_point(std::span<const CurvePoint> curve, const CostSpec& costs,
                                  double assumed_prevalence) {
  validate(costs);
  check_prevalence(assumed_prevalence, "select_operating_point");
  if (curve.empty()) throw InputError("select_operating_point: empty curve");
  std::size_t best = 0;
  double best_cost = expected_cost(curve[0], costs, assumed_prevalence);
  for (std::size_t i = 1; i < curve.size(); ++i) {
    const double cost = expected_cost(curve[i], costs, assumed_prevalence);
    if (cost < best_cost || (cost == best_cost && curve[i].fpr < curve[best].fpr)) {
      best = i;
      best_cost = cost;
    }
  }
  return curve[best];
}

std::vector<Warning> rare_event_warnings(std::span<const CurvePoint> curve,
                                         double assumed_prevalence, const WarningRequest& request,
                                         const WarningConfig& config) {
  std::vector<Warning> warnings;
  if (request.auc_reported && assumed_prevalence < config.auc_prevalence_floor) {
    warnings.push_back(
        {kWarnAucRareEvent,
         "AUC is reported for an assumed deployment prevalence of " + format_real(assumed_prevalence) +
             "; for rare events only a small region of the ROC curve matters and AUC is "
             "dominated by operating points of no consequence",
         assumed_prevalence, config.auc_prevalence_floor});
  }
  std::optional<double> test_prevalence = request.test_set_prevalence;
  if (!test_prevalence && !curve.empty()) test_prevalence = curve.back().precision;
  if (test_prevalence && assumed_prevalence > 0.0) {
    const double ratio = *test_prevalence / assumed_prevalence;
    if (ratio > config.enrichment_ratio_limit) {
      warnings.push_back(
          {kWarnEnrichment,
           "test-set prevalence " + format_real(*test_prevalence) + " is " + format_real(ratio) +
               "x the assumed deployment prevalence " + format_real(assumed_prevalence) +
               "; naive precision will be optimistic unless enrichment is weighted out",
           ratio, config.enrichment_ratio_limit});
    }
  }
  if (request.f1_reported && !request.cost_justified) {
    warnings.push_back({kWarnF1NoCost,
                        "F1 weights false positives and false negatives equally; state the "
                        "relative error costs or report an F-beta that reflects them",
                        0.0, 0.0});
  }
  return warnings;
}

}  // namespace rareval
