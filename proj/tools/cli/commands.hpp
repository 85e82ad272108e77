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

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rareval/report.hpp"

namespace rareval::cli {

// Flags every subcommand accepts.
struct Common {
  std::optional<std::uint64_t> seed_flag;
  std::uint64_t seed() const { return seed_flag.value_or(0); }
  bool reproducible = false;
  std::string config;
  std::string output_dir;
};

// Inputs of an `evaluate` or `checklist` run.
struct RunConfig {
  std::string input;
  std::string format;  // empty: from the file extension
  std::string design;
  std::optional<double> assumed_prevalence;
  std::optional<double> threshold;
  std::optional<std::size_t> k;
  std::optional<double> cost_fp;
  std::optional<double> cost_fn;
  std::vector<std::string> metrics = {"recall", "precision", "specificity", "npv"};
  double ci_level = 0.95;
  int bootstrap_resamples = 2000;
  bool f1 = false;
  bool cost_justified = false;
  bool recall_enrichment_justified = false;
  std::string scle_sample;
  std::string scle_sheet;
  std::vector<std::string> subsets;
  bool stability = false;
  std::string resample_scheme;
  std::size_t resamples = 200;
  std::string resample_metric = "recall";
  std::string human_decisions;
  std::vector<std::string> attest;  // consideration=statement
};

int cmd_evaluate(const RunConfig& config, const Common& common, std::ostream& out);
int cmd_checklist(const RunConfig& config, const Common& common, std::ostream& out);

struct AdjustPrecisionOptions {
  double sensitivity = 0.0;
  double specificity = 0.0;
  double prevalence = 0.0;
};
int cmd_adjust_precision(const AdjustPrecisionOptions& o, const Common& common, std::ostream& out);

struct SizeStudyOptions {
  std::optional<double> flag_rate_a;
  std::optional<double> flag_rate_b;
  std::optional<double> combined_flags;
  std::string combined_mode = "union";
  double overlap = 0.0;
  double precision_a = 0.0;
  double precision_b = 0.0;
  double alpha = 0.05;
  std::uint64_t replicates = 2000;
  std::optional<std::uint64_t> sample_size;
  std::optional<double> target_power;
  std::uint64_t min_size = 100;
  std::uint64_t max_size = 10'000'000;
};
int cmd_size_study(const SizeStudyOptions& o, const Common& common, std::ostream& out);

struct PairPrevalenceOptions {
  std::uint64_t n = 0;
  double duplicate_fraction = 0.0;
};
int cmd_pair_prevalence(const PairPrevalenceOptions& o, const Common& common, std::ostream& out);

struct ScleSampleOptions {
  std::string input;
  std::string format;
  std::string design;
  std::size_t n_fp = 0, n_fn = 0, n_tp = 0, n_tn = 0;
  std::vector<std::string> substratify_by;
  std::optional<std::size_t> boundary_bins;
  std::optional<double> threshold;
  bool benchmark_mode = false;
  double oversample_factor = 1.0;
  std::vector<std::string> context_fields;
  std::string sample_out;
  std::string sheet_out;
};
int cmd_scle_sample(const ScleSampleOptions& o, const Common& common, std::ostream& out);

struct ScleSheetOptions {
  std::string sample;
  std::string sheet;
  double ci_level = 0.95;
  int bootstrap_resamples = 2000;
  // apply-verdicts only
  std::string input;
  std::string format;
  std::string design;
  std::string output;
};
int cmd_scle_ingest(const ScleSheetOptions& o, const Common& common, std::ostream& out);
int cmd_scle_aggregate(const ScleSheetOptions& o, const Common& common, std::ostream& out);
int cmd_scle_apply_verdicts(const ScleSheetOptions& o, const Common& common, std::ostream& out);

struct RobustnessOptions {
  std::string input;
  std::string format;
  std::string design;
  std::optional<double> threshold;
  std::string attribute;
  std::vector<std::string> metrics = {"recall", "precision"};
  double ci_level = 0.95;
  double alpha = 0.05;
  std::size_t permutations = 2000;
  std::string metric = "recall";
  std::string scheme = "bootstrap";
  std::size_t n = 1000;
};
int cmd_subsets(const RobustnessOptions& o, const Common& common, std::ostream& out);
int cmd_stability(const RobustnessOptions& o, const Common& common, std::ostream& out);
int cmd_resample(const RobustnessOptions& o, const Common& common, std::ostream& out);

struct SynthOptions {
  std::string spec;
  std::optional<std::uint64_t> n;
  std::optional<double> prevalence;
  bool fixed_count = false;
  std::string family;
  std::optional<double> separation;
  std::optional<int> score_decimals;
  std::optional<double> threshold;
  std::optional<double> label_noise;
  std::optional<std::size_t> n_runs;
  std::optional<double> flip_probability;
  std::optional<double> benchmark_flip_probability;
  std::vector<std::string> enrich;    // selector:probability
  std::vector<std::string> subgroup;  // name:cat1|cat2
  std::vector<double> truth_thresholds;
  std::string output;
  std::string truth_out;
};
int cmd_synth(const SynthOptions& o, const Common& common, std::ostream& out);

}  // namespace rareval::cli
