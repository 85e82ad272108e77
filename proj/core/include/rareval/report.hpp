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

#include "rareval/curves.hpp"
#include "rareval/datamodel.hpp"
#include "rareval/metrics.hpp"
#include "rareval/robustness.hpp"
#include "rareval/scle.hpp"

namespace rareval::report {

inline constexpr std::string_view kSchemaId = "rareval.report";
inline constexpr std::string_view kSchemaVersion = "1.0.0";

enum class Consideration {
  kTestSets,
  kAnnotationProcess,
  kMetrics,
  kRecall,
  kPrecision,
  kSpecificity,
  kDecisionThresholds,
  kBenchmarks,
  kRobustness,
  kNonTriviality,
  kTypesOfErrors,
  kHumanAiInteraction,
};
inline constexpr std::size_t kConsiderationCount = 12;

enum class Status { kSatisfied, kPartial, kUnsatisfied, kNotApplicable, kExternalEvidenceRequired };

std::string_view to_string(Consideration c);
std::string_view to_string(Status s);
Consideration parse_consideration(std::string_view text);
Status parse_status(std::string_view text);
std::string_view key_questions(Consideration c);

struct ChecklistItem {
  Consideration consideration = Consideration::kTestSets;
  std::string key_questions;
  Status status = Status::kUnsatisfied;
  std::vector<std::string> evidence;
  std::string rationale;  // required unless status is satisfied

  bool operator==(const ChecklistItem&) const = default;
};

struct DatasetSummary {
  std::size_t n = 0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  std::size_t ambiguous = 0;
  std::size_t excluded = 0;
  std::optional<double> test_set_prevalence;  // positives / (positives + negatives)
  std::optional<double> weighted_prevalence;  // under the design, when present
  std::vector<StratumSpec> strata;
  std::size_t revision = 0;
};

DatasetSummary describe(const Dataset& dataset);

struct OperatingPoint {
  std::string method;  // "threshold", "k" or "cost"
  double threshold = 0.0;
  std::optional<std::size_t> k;
  std::optional<CostSpec> costs;
  std::optional<double> expected_cost;
};

struct PrevalenceProjection {
  double sensitivity = 0.0;
  double specificity = 0.0;
  double assumed_prevalence = 0.0;
  std::optional<double> precision;
};

struct RunInfo {
  std::string command;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::optional<std::string> generated_at;  // omitted in reproducible runs
};

// Everything a run produced. Absent analyses stay empty and lower the
// matching checklist rows.
struct ReportInputs {
  RunInfo run;
  std::optional<DatasetSummary> dataset;
  std::vector<MetricEstimate> metrics;
  std::vector<MetricEstimate> unweighted_metrics;  // naive estimates next to weighted ones
  std::vector<MetricEstimate> benchmark_metrics;
  std::optional<ConfusionCounts> counts;
  std::optional<PrecisionAtK> precision_at_k;
  std::optional<double> assumed_prevalence;
  std::optional<PrevalenceProjection> projection;
  std::optional<Curve> curve;
  std::optional<double> auc;
  std::optional<OperatingPoint> operating_point;
  std::vector<Warning> warnings;
  std::optional<scle::ScleSummary> scle;
  std::vector<SubsetReport> subsets;
  std::optional<StabilityReport> stability;
  std::vector<ResamplingSummary> resampling;
  std::optional<Concordance> concordance;

  // Caller statements that cannot be derived from numbers.
  bool recall_enrichment_justified = false;
  bool cost_justified = false;
  std::map<Consideration, std::string> attestations;
};

// Deterministic, conservative mapping from outputs to the 12 checklist
// rows. Qualitative rows never exceed "partial" without an attestation.
std::vector<ChecklistItem> prefill_checklist(const ReportInputs& inputs);

// Throws InvariantError unless every consideration appears exactly once and
// every non-satisfied row has a rationale.
void check_checklist(const std::vector<ChecklistItem>& checklist);

struct RenderedReport {
  std::string json;
  std::string markdown;
};

RenderedReport render_report(const ReportInputs& inputs, const std::vector<ChecklistItem>& checklist);

std::string checklist_to_json(const std::vector<ChecklistItem>& checklist);
std::string checklist_to_markdown(const std::vector<ChecklistItem>& checklist);

// The published report schema and a validator for the JSON-schema subset it
// uses (type, properties, required, additionalProperties, items, enum,
// const, minimum, maximum, minItems, maxItems, local $ref).
std::string_view report_schema();
std::vector<std::string> validate_json(std::string_view schema, std::string_view document);

}  // namespace rareval::report
