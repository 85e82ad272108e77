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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rareval/datamodel.hpp"

namespace rareval::synth {

// Positive scores are the negative-class distribution shifted by
// `separation`. kLogitNormal: logistic(N(+-separation/2, 1)), in (0, 1).
// kUniform: U(0, 1) vs U(separation, 1 + separation), rescaled to [0, 1];
// separation >= 1 separates the classes completely.
enum class ScoreFamily { kLogitNormal, kUniform };

enum class Selector { kPositive, kNegative, kAll };

struct EnrichmentRule {
  Selector selector = Selector::kAll;  // predicate on the latent truth
  double inclusion_probability = 1.0;
};

struct SubgroupSpec {
  std::string name;
  std::vector<std::string> categories;  // assigned uniformly at random
};

struct PopulationSpec {
  std::uint64_t n = 1000;
  double prevalence = 0.1;
  bool fixed_count = false;  // exactly round(prevalence * n) positives
  ScoreFamily family = ScoreFamily::kLogitNormal;
  double separation = 2.0;
  std::optional<int> score_decimals;  // round scores to create ties
  double threshold = 0.5;             // sets `predicted`
  std::vector<EnrichmentRule> enrichment;
  double label_noise = 0.0;  // P(reference label differs from latent truth)
  std::size_t n_runs = 0;
  double flip_probability = 0.0;  // per run, relative to `predicted`
  std::optional<double> benchmark_flip_probability;
  std::vector<SubgroupSpec> subgroups;
  std::vector<double> truth_thresholds;
  std::uint64_t seed = 0;
};

void validate(const PopulationSpec& spec);
PopulationSpec population_spec_from_json(std::string_view json_text);
std::string population_spec_to_json(const PopulationSpec& spec);

struct TruthPoint {
  double threshold = 0.0;
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::optional<double> recall;
  std::optional<double> precision;
  std::optional<double> specificity;
};

// Exact population-level performance, by enumeration over every member of
// the generated population (against its reference labels).
class PopulationTruth {
 public:
  PopulationTruth() = default;
  PopulationTruth(std::vector<double> scores, std::vector<bool> reference_positive,
                  std::uint64_t latent_positives);

  TruthPoint at(double threshold) const;
  std::uint64_t size() const { return scores_.size(); }
  std::uint64_t positives() const { return positives_; }
  std::uint64_t latent_positives() const { return latent_positives_; }
  double prevalence() const;

 private:
  std::vector<double> scores_;
  std::vector<bool> reference_positive_;
  std::uint64_t positives_ = 0;
  std::uint64_t latent_positives_ = 0;
};

struct Generated {
  Dataset dataset;  // the (possibly enriched) sample; the population if no enrichment
  PopulationTruth truth;
  std::vector<bool> sample_latent_truth;  // hidden: never written to dataset files
};

Generated generate(const PopulationSpec& spec);

// JSON sidecar with exact population metrics at spec.threshold and at each
// spec.truth_thresholds entry. Marked non-ingestible.
std::string truth_sidecar_json(const PopulationSpec& spec, const PopulationTruth& truth);
void write_truth_sidecar(const std::filesystem::path& path, const PopulationSpec& spec,
                         const PopulationTruth& truth);

}  // namespace rareval::synth
