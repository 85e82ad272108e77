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
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "rareval/datamodel.hpp"

// Structured case-level examination: stratified samples of classified cases
// for human review, the review sheet round trip, and aggregation of the
// diagnostic tags reviewers return.
namespace rareval::scle {

enum class Cell { kTP, kFP, kFN, kTN };
// Model x benchmark cross-classification.
enum class BenchmarkCell { kBothPositive, kModelOnly, kBenchmarkOnly, kBothNegative };

std::string_view to_string(Cell cell);
std::string_view to_string(BenchmarkCell cell);
Cell parse_cell(std::string_view text);
BenchmarkCell parse_benchmark_cell(std::string_view text);
inline bool is_disagreement(BenchmarkCell c) {
  return c == BenchmarkCell::kModelOnly || c == BenchmarkCell::kBenchmarkOnly;
}

struct ScleConfig {
  std::size_t n_fp = 0;
  std::size_t n_fn = 0;
  std::size_t n_tp = 0;
  std::size_t n_tn = 0;  // true negatives are rarely worth reviewing
  std::vector<std::string> substratify_by;
  std::optional<std::size_t> boundary_bins;
  std::optional<double> threshold;  // reference point for boundary distance
  bool benchmark_mode = false;
  double disagreement_oversample_factor = 1.0;
  std::uint64_t seed = 0;
};

void validate(const ScleConfig& config);
std::string config_to_json(const ScleConfig& config);
ScleConfig config_from_json(std::string_view text);

struct SampleRow {
  std::string case_id;
  Cell cell = Cell::kTP;
  std::optional<BenchmarkCell> benchmark_cell;
  std::string sampling_cell;  // the cell the row was drawn from
  std::string stratum;        // sub-stratum label within the sampling cell ("" if none)
  double sampling_weight = 1.0;

  bool operator==(const SampleRow&) const = default;
};

struct CellAllocation {
  std::string cell;
  std::size_t population = 0;
  std::size_t requested = 0;
  std::size_t sampled = 0;
  std::map<std::string, std::size_t> per_stratum;  // sub-stratum -> sampled

  bool operator==(const CellAllocation&) const = default;
};

struct ScleSample {
  std::vector<SampleRow> rows;
  std::vector<CellAllocation> cells;
  std::vector<std::string> warnings;  // shortfalls, never padded
  ScleConfig config;
  std::string config_hash;

  const SampleRow* find(std::string_view case_id) const;
};

// Seeded uniform sampling without replacement within each requested cell.
// With substratify_by and/or boundary_bins the cell is split into
// sub-strata, allocation is proportional with largest-remainder rounding,
// and the most confident boundary bin always gets at least one case when
// it is non-empty. In benchmark mode the four model x benchmark cells are
// sampled instead: the total budget n_fp + n_fn + n_tp + n_tn is spread
// over them with disagreement cells weighted by the oversample factor, and
// fractional quotas are rounded by seeded systematic sampling so expected
// allocations equal the quotas exactly.
ScleSample draw_sample(const Dataset& dataset, const ScleConfig& config);

std::string sample_to_json(const ScleSample& sample);
ScleSample sample_from_json(std::string_view text);

inline constexpr std::string_view kTagColumns[] = {"never_event", "unexpected_error",
                                                   "input_data_issue", "test_set_issue"};

enum class Tag { kNeverEvent, kUnexpectedError, kInputDataIssue, kTestSetIssue };
enum class Triviality { kTrivial, kNonTrivial, kUnclear };

std::string_view to_string(Tag tag);
std::string_view to_string(Triviality t);
Triviality parse_triviality(std::string_view text);

struct SheetOptions {
  std::vector<std::string> context_fields;  // subgroup or metadata keys
  std::optional<std::string> generated_at;  // omitted when empty (reproducible runs)
};

// Review sheet: a 3-line comment header (# seed, # config_hash,
// # generated_at) followed by a CSV table with one row per sampled case and
// empty tag columns.
void emit_review_sheet(const ScleSample& sample, const Dataset& dataset,
                       const SheetOptions& options, std::ostream& out);
void emit_review_sheet(const ScleSample& sample, const Dataset& dataset,
                       const SheetOptions& options, const std::filesystem::path& path);

struct ScleAnnotation {
  std::string case_id;
  std::string reviewer;
  std::set<Tag> tags;
  std::optional<Triviality> triviality;
  std::string note;
  std::optional<ReferenceLabel> verdict;

  bool operator==(const ScleAnnotation&) const = default;
};

struct AnnotationSet {
  std::vector<ScleAnnotation> annotations;  // only rows a reviewer filled in
  std::vector<std::string> warnings;        // e.g. TP rows missing triviality
};

// Rejects sheets whose config hash differs from the sample's, unknown case
// ids, duplicate rows and values outside the tag vocabularies, naming the
// offending row.
AnnotationSet ingest_annotations(std::istream& sheet, const ScleSample& sample);
AnnotationSet ingest_annotations(const std::filesystem::path& sheet, const ScleSample& sample);

struct AggregateOptions {
  double ci_level = 0.95;
  int bootstrap_resamples = 2000;
  std::uint64_t seed = 0;
};

struct TagStat {
  std::size_t count = 0;
  double rate = 0.0;  // count / cell sample size
  double ci_low = 0.0;
  double ci_high = 0.0;
  double projected_count = 0.0;  // rate * cell population
  double projected_low = 0.0;
  double projected_high = 0.0;
};

struct CellSummary {
  std::string cell;
  std::size_t sample_size = 0;
  std::size_t population = 0;
  double sampling_weight = 0.0;
  std::map<std::string, TagStat> tags;  // keyed by tag column name
};

struct TrivialitySummary {
  std::size_t sampled_tp = 0;
  std::size_t trivial = 0;
  std::size_t non_trivial = 0;
  std::size_t unclear = 0;
  std::size_t missing = 0;
  std::optional<double> rate;  // trivial / sampled_tp
  double ci_low = 0.0;
  double ci_high = 0.0;
};

struct NeverEventItem {
  std::string case_id;
  std::string cell;
  std::string note;
};

struct RemedialAction {
  std::string code;
  std::string tag;
  std::size_t count = 0;
  std::string action;
};

struct ScleSummary {
  bool no_findings = true;
  std::size_t annotations = 0;
  std::vector<CellSummary> cells;
  TrivialitySummary triviality;
  std::vector<NeverEventItem> never_events;  // always itemized
  // sub-stratum -> tag -> count, when the sample was sub-stratified
  std::map<std::string, std::map<std::string, std::size_t>> per_stratum;
  std::vector<RemedialAction> remedial_actions;
  std::vector<std::pair<std::string, std::string>> verdicts;  // case_id, corrected label
};

ScleSummary aggregate(const std::vector<ScleAnnotation>& annotations, const ScleSample& sample,
                      const AggregateOptions& options = {});

std::string summary_to_json(const ScleSummary& summary);
std::string summary_to_markdown(const ScleSummary& summary);

// Advisory remedial action for a tag.
std::string_view remedial_code(Tag tag);
std::string_view remedial_action(Tag tag);

// Applies reviewer verdicts to a copy of the dataset; the input is not
// modified. Metadata records the revision.
Dataset apply_verdicts(const Dataset& dataset, const std::vector<ScleAnnotation>& annotations);

}  // namespace rareval::scle
