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
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace rareval {

enum class ReferenceLabel { kPositive, kNegative, kAmbiguous, kExcluded };

std::string_view to_string(ReferenceLabel label);
// Case-insensitive; throws InputError on anything outside the vocabulary.
ReferenceLabel parse_reference_label(std::string_view text);

// Positive and Negative controls are the only labels that enter
// confusion counts. Ambiguous cases stay visible to case-level review;
// Excluded cases are invisible downstream.
inline bool is_evaluable(ReferenceLabel label) {
  return label == ReferenceLabel::kPositive || label == ReferenceLabel::kNegative;
}

struct EvaluationCase {
  std::string case_id;
  ReferenceLabel reference = ReferenceLabel::kNegative;
  std::optional<double> score;
  std::optional<bool> predicted;
  std::optional<bool> benchmark_predicted;
  std::optional<std::string> stratum_id;
  std::map<std::string, std::string> subgroups;
  std::vector<bool> repeated_labels;  // empty means "not recorded"

  bool operator==(const EvaluationCase&) const = default;
};

struct StratumSpec {
  std::string stratum_id;
  double inclusion_probability = 1.0;
  std::string description;

  bool operator==(const StratumSpec&) const = default;
};

using Metadata = std::map<std::string, std::string>;

// Immutable, validated collection of evaluation cases plus the sampling
// design they were drawn under. An empty design means a simple random
// sample; a non-empty design turns on inverse-probability weighting.
class Dataset {
 public:
  Dataset() = default;
  // Validates every invariant and throws InputError naming the offending
  // case (1-based position and case_id).
  explicit Dataset(std::vector<EvaluationCase> cases,
                   std::vector<StratumSpec> design = {}, Metadata metadata = {});

  std::span<const EvaluationCase> cases() const { return state_->cases; }
  std::span<const StratumSpec> design() const { return state_->design; }
  const Metadata& metadata() const { return state_->metadata; }

  std::size_t size() const { return state_->cases.size(); }
  bool empty() const { return state_->cases.empty(); }
  bool has_design() const { return !state_->design.empty(); }

  const StratumSpec& stratum(std::string_view stratum_id) const;
  // 1 / inclusion probability under a design, 1 otherwise.
  double weight(const EvaluationCase& c) const;
  const EvaluationCase* find(std::string_view case_id) const;

  bool operator==(const Dataset& other) const;

 private:
  struct State {
    std::vector<EvaluationCase> cases;
    std::vector<StratumSpec> design;
    Metadata metadata;
    std::unordered_map<std::string, std::size_t> index;
  };
  std::shared_ptr<const State> state_ = std::make_shared<const State>();
};

struct LabelCounts {
  std::size_t positive = 0;
  std::size_t negative = 0;
  std::size_t ambiguous = 0;
  std::size_t excluded = 0;
};
LabelCounts count_labels(const Dataset& dataset);

enum class Format { kCsv, kJsonl };
std::string_view to_string(Format format);
Format parse_format(std::string_view text);
// Picks the format from the file extension (.csv, .jsonl, .ndjson).
Format format_from_path(const std::filesystem::path& path);

// Parsers used by ingest(); exposed for in-memory use and tests.
Dataset parse_csv(std::istream& in, std::vector<StratumSpec> design = {},
                  Metadata metadata = {});
Dataset parse_jsonl(std::istream& in, std::vector<StratumSpec> design = {},
                    Metadata metadata = {});

// Design sidecar: {"strata": [...], "metadata": {...}}.
struct DesignFile {
  std::vector<StratumSpec> strata;
  Metadata metadata;
};
DesignFile read_design(const std::filesystem::path& path);
void write_design(const std::filesystem::path& path, const DesignFile& design);
std::filesystem::path design_sidecar_path(const std::filesystem::path& data_path);

// Reads a dataset file. When `design_path` is empty, a sidecar at
// design_sidecar_path(path) is used if it exists.
Dataset ingest(const std::filesystem::path& path, Format format,
               const std::optional<std::filesystem::path>& design_path = std::nullopt);

// Writes the dataset and, when it carries a design or metadata, the sidecar.
void emit(const Dataset& dataset, const std::filesystem::path& path, Format format);
void emit_csv(const Dataset& dataset, std::ostream& out);
void emit_jsonl(const Dataset& dataset, std::ostream& out);

// predicted = (score >= threshold); scores are kept.
Dataset apply_threshold(const Dataset& dataset, double threshold);

}  // namespace rareval
