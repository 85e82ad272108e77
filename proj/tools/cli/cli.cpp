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

#include "cli/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cli/commands.hpp"
#include "rareval/common.hpp"
#include "rareval/version.hpp"

namespace rareval::cli {
namespace {

using json = nlohmann::ordered_json;

template <typename T>
CLI::Option* add_optional(CLI::App* app, const std::string& name, std::optional<T>& target,
                          const std::string& description) {
  return app->add_option_function<T>(
      name, [&target](const T& v) { target = v; }, description);
}

template <typename T>
CLI::Option* add_list(CLI::App* app, const std::string& name, std::vector<T>& target,
                      const std::string& description) {
  return app->add_option(name, target, description)
      ->delimiter(',')
      ->expected(1)
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
}

void add_common(CLI::App* app, Common& common) {
  add_optional(app, "--seed", common.seed_flag, "Master seed (default 0); module streams are derived from it");
  app->add_flag("--reproducible", common.reproducible, "Omit timestamps so outputs are byte-identical");
  app->add_option("--config", common.config,
                  "JSON file of flag values; its values override flags given on the command line")
      ->check(CLI::ExistingFile);
  app->add_option("--output-dir", common.output_dir, "Directory for output files")
      ->envname("RAREVAL_OUTPUT_DIR");
}

void add_dataset_input(CLI::App* app, std::string& input, std::string& format, std::string& design) {
  app->add_option("--input", input, "Dataset file (.csv or .jsonl)")->required()->check(CLI::ExistingFile);
  app->add_option("--format", format, "csv or jsonl (default: from the file extension)")
      ->check(CLI::IsMember({"csv", "jsonl"}));
  app->add_option("--design", design, "Sampling design JSON (default: <input>.design.json if present)")
      ->check(CLI::ExistingFile);
}

void add_run_config(CLI::App* app, RunConfig& rc, bool input_required) {
  auto* input = app->add_option("--input", rc.input, "Dataset file (.csv or .jsonl)")->check(CLI::ExistingFile);
  if (input_required) input->required();
  app->add_option("--format", rc.format, "csv or jsonl (default: from the file extension)")
      ->check(CLI::IsMember({"csv", "jsonl"}));
  app->add_option("--design", rc.design, "Sampling design JSON (default: <input>.design.json if present)")
      ->check(CLI::ExistingFile);
  add_optional(app, "--assumed-prevalence", rc.assumed_prevalence, "Assumed deployment prevalence")
      ->check(CLI::Range(0.0, 1.0));
  add_optional(app, "--threshold", rc.threshold, "Operating point: predict positive when score >= threshold");
  add_optional(app, "--k", rc.k, "Operating point: the k highest-scored cases");
  add_optional(app, "--cost-fp", rc.cost_fp, "Operating point by minimal expected cost: cost of a false positive");
  add_optional(app, "--cost-fn", rc.cost_fn, "Operating point by minimal expected cost: cost of a false negative");
  add_list(app, "--metrics", rc.metrics, "Metrics: recall, precision, specificity, npv")->capture_default_str();
  app->add_option("--ci-level", rc.ci_level, "Confidence level")->capture_default_str()->check(CLI::Range(0.5, 0.999999));
  app->add_option("--bootstrap-resamples", rc.bootstrap_resamples, "Bootstrap resamples for weighted intervals")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app->add_flag("--f1", rc.f1, "Also report F1");
  app->add_flag("--cost-justified", rc.cost_justified, "Relative error costs were considered for F1/threshold");
  app->add_flag("--recall-enrichment-justified", rc.recall_enrichment_justified,
                "State that positive-control enrichment does not bias recall");
  app->add_option("--scle-sample", rc.scle_sample, "SCLE sample file from `scle sample`")->check(CLI::ExistingFile);
  app->add_option("--scle-sheet", rc.scle_sheet, "Completed SCLE review sheet")->check(CLI::ExistingFile);
  add_list(app, "--subsets", rc.subsets, "Subgroup attributes for the subset breakdown");
  app->add_flag("--stability", rc.stability, "Report stability over repeated runs");
  app->add_option("--resample-scheme", rc.resample_scheme, "bootstrap or k_fold")
      ->check(CLI::IsMember({"bootstrap", "k_fold"}));
  app->add_option("--resamples", rc.resamples, "Bootstrap resamples or number of folds")->capture_default_str();
  app->add_option("--resample-metric", rc.resample_metric, "Metric for resampling variability")->capture_default_str();
  app->add_option("--human-decisions", rc.human_decisions, "CSV of case_id,decision for concordance and override rate")
      ->check(CLI::ExistingFile);
  add_list(app, "--attest", rc.attest, "Checklist attestation as consideration=statement");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// The config file replaces any command-line occurrence of the flags it
// names, so config values win.
std::vector<std::string> apply_config(const std::vector<std::string>& args, CLI::App* leaf,
                                      const std::string& config_path) {
  json config;
  try {
    config = json::parse(read_file(config_path));
  } catch (const json::exception& e) {
    throw InputError("config '" + config_path + "': " + e.what());
  }
  if (!config.is_object()) throw InputError("config '" + config_path + "' must be a JSON object");

  std::vector<std::string> tokens;
  std::vector<std::string> names;
  for (auto it = config.begin(); it != config.end(); ++it) {
    const std::string name = "--" + it.key();
    if (it.key() == "config") throw InputError("config: the 'config' key is not allowed");
    const CLI::Option* opt = leaf->get_option_no_throw(name);
    if (!opt) throw InputError("config: unknown option '" + it.key() + "' for '" + leaf->get_name() + "'");
    names.push_back(name);
    const json& v = it.value();
    auto token = [&](const json& item) {
      if (item.is_string()) return name + "=" + item.get<std::string>();
      if (item.is_boolean()) return name + "=" + (item.get<bool>() ? "true" : "false");
      if (item.is_number()) return name + "=" + item.dump();
      throw InputError("config: unsupported value for '" + it.key() + "'");
    };
    if (v.is_array()) {
      for (const json& item : v) tokens.push_back(token(item));
    } else {
      tokens.push_back(token(v));
    }
  }

  std::vector<std::string> kept;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    bool drop = false;
    for (const std::string& name : names) {
      if (a == name) {
        drop = true;
        const CLI::Option* opt = leaf->get_option_no_throw(name);
        if (opt->get_type_size_max() > 0 && i + 1 < args.size()) ++i;
      } else if (a.rfind(name + "=", 0) == 0) {
        drop = true;
      }
    }
    if (!drop) kept.push_back(a);
  }
  kept.insert(kept.end(), tokens.begin(), tokens.end());
  return kept;
}

CLI::App* selected_leaf(CLI::App& app) {
  CLI::App* node = &app;
  for (;;) {
    auto subs = node->get_subcommands();
    if (subs.empty()) return node;
    node = subs.front();
  }
}

void parse(CLI::App& app, const std::vector<std::string>& args) {
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  app.parse(reversed);
}

int error_json(std::ostream& err, std::string_view kind, int code, const std::string& message) {
  json j = {{"error", {{"kind", kind}, {"exit_code", code}, {"message", message}}}};
  err << j.dump() << "\n";
  return code;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Prevalence-aware evaluation of rare-event classifiers", "rareval"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  Common common;
  std::function<int()> action;

  RunConfig evaluate_config;
  auto* evaluate = app.add_subcommand(
      "evaluate", "Metrics, curves, warnings and the full report for one dataset (needs --output-dir)");
  add_run_config(evaluate, evaluate_config, true);
  add_common(evaluate, common);
  evaluate->callback([&] { action = [&] { return cmd_evaluate(evaluate_config, common, out); }; });

  AdjustPrecisionOptions adjust;
  auto* adjust_cmd = app.add_subcommand("adjust-precision", "Project precision to a deployment prevalence");
  adjust_cmd->add_option("--sensitivity", adjust.sensitivity, "Sensitivity (recall)")->required()->check(CLI::Range(0.0, 1.0));
  adjust_cmd->add_option("--specificity", adjust.specificity, "Specificity")->required()->check(CLI::Range(0.0, 1.0));
  adjust_cmd->add_option("--prevalence", adjust.prevalence, "Deployment prevalence")->required()->check(CLI::Range(0.0, 1.0));
  add_common(adjust_cmd, common);
  adjust_cmd->callback([&] { action = [&] { return cmd_adjust_precision(adjust, common, out); }; });

  SizeStudyOptions size;
  auto* size_cmd = app.add_subcommand("size-study", "Power of a two-model precision comparison, or the sample size for a target power");
  add_optional(size_cmd, "--flag-rate-a", size.flag_rate_a, "Per-case flag rate of model A");
  add_optional(size_cmd, "--flag-rate-b", size.flag_rate_b, "Per-case flag rate of model B");
  add_optional(size_cmd, "--combined-flags", size.combined_flags,
               "Expected annotated flags at --sample-size; sets both flag rates");
  size_cmd->add_option("--combined-mode", size.combined_mode, "How --combined-flags counts: union or sum")
      ->capture_default_str()
      ->check(CLI::IsMember({"union", "sum"}));
  size_cmd->add_option("--overlap", size.overlap, "Fraction of the larger flag set shared by both models")->capture_default_str();
  size_cmd->add_option("--precision-a", size.precision_a, "Assumed precision of model A")->required();
  size_cmd->add_option("--precision-b", size.precision_b, "Assumed precision of model B")->required();
  size_cmd->add_option("--alpha", size.alpha, "Significance level")->capture_default_str();
  size_cmd->add_option("--replicates", size.replicates, "Monte Carlo replicates per size")->capture_default_str();
  add_optional(size_cmd, "--sample-size", size.sample_size, "Simulate power at this size");
  add_optional(size_cmd, "--target-power", size.target_power, "Solve for the smallest size reaching this power");
  size_cmd->add_option("--min-size", size.min_size, "Smallest size searched")->capture_default_str();
  size_cmd->add_option("--max-size", size.max_size, "Largest size searched")->capture_default_str();
  add_common(size_cmd, common);
  size_cmd->callback([&] { action = [&] { return cmd_size_study(size, common, out); }; });

  PairPrevalenceOptions pair;
  auto* pair_cmd = app.add_subcommand("pair-prevalence", "Prevalence of duplicate pairs among all record pairs");
  pair_cmd->add_option("--n", pair.n, "Number of records")->required();
  pair_cmd->add_option("--duplicate-fraction", pair.duplicate_fraction, "Fraction of records that have a duplicate")->required();
  add_common(pair_cmd, common);
  pair_cmd->callback([&] { action = [&] { return cmd_pair_prevalence(pair, common, out); }; });

  auto* scle_cmd = app.add_subcommand("scle", "Structured case-level examination");
  scle_cmd->require_subcommand(1);

  ScleSampleOptions sample;
  auto* sample_cmd = scle_cmd->add_subcommand("sample", "Draw a stratified review sample and its review sheet");
  add_dataset_input(sample_cmd, sample.input, sample.format, sample.design);
  sample_cmd->add_option("--n-fp", sample.n_fp, "False positives to sample")->capture_default_str();
  sample_cmd->add_option("--n-fn", sample.n_fn, "False negatives to sample")->capture_default_str();
  sample_cmd->add_option("--n-tp", sample.n_tp, "True positives to sample")->capture_default_str();
  sample_cmd->add_option("--n-tn", sample.n_tn, "True negatives to sample")->capture_default_str();
  add_list(sample_cmd, "--substratify-by", sample.substratify_by, "Subgroup attributes to stratify on within cells");
  add_optional(sample_cmd, "--boundary-bins", sample.boundary_bins, "Stratify on distance to the threshold in this many bins");
  add_optional(sample_cmd, "--threshold", sample.threshold, "Decision threshold used for boundary distance");
  sample_cmd->add_flag("--benchmark-mode", sample.benchmark_mode, "Sample the model x benchmark cells instead");
  sample_cmd->add_option("--oversample-factor", sample.oversample_factor, "Weight of the disagreement cells in benchmark mode")
      ->capture_default_str();
  add_list(sample_cmd, "--context-field", sample.context_fields, "Subgroup or metadata field copied into the sheet");
  sample_cmd->add_option("--sample-out", sample.sample_out, "Sample file (default: <output-dir>/scle_sample.json or stdout)");
  sample_cmd->add_option("--sheet-out", sample.sheet_out, "Review sheet CSV (default: <output-dir>/review_sheet.csv)");
  add_common(sample_cmd, common);
  sample_cmd->callback([&] { action = [&] { return cmd_scle_sample(sample, common, out); }; });

  ScleSheetOptions sheet;
  auto add_sheet = [&](CLI::App* cmd) {
    cmd->add_option("--sample", sheet.sample, "Sample file from `scle sample`")->required()->check(CLI::ExistingFile);
    cmd->add_option("--sheet", sheet.sheet, "Completed review sheet")->required()->check(CLI::ExistingFile);
  };
  auto* ingest_cmd = scle_cmd->add_subcommand("ingest", "Validate a completed review sheet");
  add_sheet(ingest_cmd);
  add_common(ingest_cmd, common);
  ingest_cmd->callback([&] { action = [&] { return cmd_scle_ingest(sheet, common, out); }; });

  auto* aggregate_cmd = scle_cmd->add_subcommand("aggregate", "Tag rates, projections and never events from a review sheet");
  add_sheet(aggregate_cmd);
  aggregate_cmd->add_option("--ci-level", sheet.ci_level, "Confidence level")->capture_default_str();
  aggregate_cmd->add_option("--bootstrap-resamples", sheet.bootstrap_resamples, "Bootstrap resamples for rate intervals")
      ->capture_default_str();
  add_common(aggregate_cmd, common);
  aggregate_cmd->callback([&] { action = [&] { return cmd_scle_aggregate(sheet, common, out); }; });

  auto* verdict_cmd = scle_cmd->add_subcommand("apply-verdicts", "Write a revised dataset with reviewer verdicts applied");
  add_sheet(verdict_cmd);
  add_dataset_input(verdict_cmd, sheet.input, sheet.format, sheet.design);
  verdict_cmd->add_option("--output", sheet.output, "Revised dataset file")->required();
  add_common(verdict_cmd, common);
  verdict_cmd->callback([&] { action = [&] { return cmd_scle_apply_verdicts(sheet, common, out); }; });

  RobustnessOptions rob;
  auto add_rob_input = [&](CLI::App* cmd) {
    add_dataset_input(cmd, rob.input, rob.format, rob.design);
    add_optional(cmd, "--threshold", rob.threshold, "Derive predictions from scores at this threshold");
  };
  auto* subsets_cmd = app.add_subcommand("subsets", "Metrics per subgroup category with a heterogeneity screen");
  add_rob_input(subsets_cmd);
  subsets_cmd->add_option("--attribute", rob.attribute, "Subgroup attribute")->required();
  add_list(subsets_cmd, "--metrics", rob.metrics, "Metrics: recall, precision, specificity, npv")->capture_default_str();
  subsets_cmd->add_option("--ci-level", rob.ci_level, "Confidence level")->capture_default_str();
  subsets_cmd->add_option("--alpha", rob.alpha, "Significance level of the heterogeneity screen")->capture_default_str();
  subsets_cmd->add_option("--permutations", rob.permutations, "Permutations for the exact fallback")->capture_default_str();
  add_common(subsets_cmd, common);
  subsets_cmd->callback([&] { action = [&] { return cmd_subsets(rob, common, out); }; });

  auto* stability_cmd = app.add_subcommand("stability", "Agreement of repeated runs of a nondeterministic model");
  add_dataset_input(stability_cmd, rob.input, rob.format, rob.design);
  add_common(stability_cmd, common);
  stability_cmd->callback([&] { action = [&] { return cmd_stability(rob, common, out); }; });

  auto* resample_cmd = app.add_subcommand("resample", "Variability of a metric under evaluation-set resampling");
  add_rob_input(resample_cmd);
  resample_cmd->add_option("--metric", rob.metric, "Metric")->capture_default_str();
  resample_cmd->add_option("--scheme", rob.scheme, "bootstrap or k_fold")
      ->capture_default_str()
      ->check(CLI::IsMember({"bootstrap", "k_fold"}));
  resample_cmd->add_option("--n", rob.n, "Resamples (bootstrap) or folds (k_fold)")->capture_default_str();
  resample_cmd->add_option("--ci-level", rob.ci_level, "Level of the percentile interval")->capture_default_str();
  add_common(resample_cmd, common);
  resample_cmd->callback([&] { action = [&] { return cmd_resample(rob, common, out); }; });

  SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic population with an exact truth sidecar");
  synth_cmd->add_option("--spec", synth.spec, "Population spec JSON; flags below override its fields")
      ->check(CLI::ExistingFile);
  add_optional(synth_cmd, "--n", synth.n, "Population size");
  add_optional(synth_cmd, "--prevalence", synth.prevalence, "Prevalence of positives");
  synth_cmd->add_flag("--fixed-count", synth.fixed_count, "Exactly round(prevalence * n) positives");
  synth_cmd->add_option("--family", synth.family, "Score family: logit_normal or uniform")
      ->check(CLI::IsMember({"logit_normal", "uniform"}));
  add_optional(synth_cmd, "--separation", synth.separation, "Shift between class score distributions");
  add_optional(synth_cmd, "--score-decimals", synth.score_decimals, "Round scores to this many decimals");
  add_optional(synth_cmd, "--threshold", synth.threshold, "Threshold that sets `predicted`");
  add_optional(synth_cmd, "--label-noise", synth.label_noise, "Probability that a reference label is flipped");
  add_optional(synth_cmd, "--n-runs", synth.n_runs, "Repeated runs to record");
  add_optional(synth_cmd, "--flip-probability", synth.flip_probability, "Per-run label flip probability");
  add_optional(synth_cmd, "--benchmark-flip-probability", synth.benchmark_flip_probability,
               "Benchmark labels: flip probability relative to `predicted`");
  add_list(synth_cmd, "--enrich", synth.enrich, "Enrichment rule selector:probability (positive, negative, all)");
  add_list(synth_cmd, "--subgroup", synth.subgroup, "Subgroup name:cat1|cat2|...");
  add_list(synth_cmd, "--truth-threshold", synth.truth_thresholds, "Extra thresholds for the truth sidecar");
  synth_cmd->add_option("--output", synth.output, "Dataset file (.csv or .jsonl)")->required();
  synth_cmd->add_option("--truth-out", synth.truth_out, "Truth sidecar (default: <output>.truth.json)");
  add_common(synth_cmd, common);
  synth_cmd->callback([&] { action = [&] { return cmd_synth(synth, common, out); }; });

  RunConfig checklist_config;
  auto* checklist_cmd = app.add_subcommand("checklist", "Prefill and render the evaluation checklist");
  add_run_config(checklist_cmd, checklist_config, false);
  add_common(checklist_cmd, common);
  checklist_cmd->callback([&] { action = [&] { return cmd_checklist(checklist_config, common, out); }; });

  try {
    parse(app, args);
    if (!common.config.empty()) {
      CLI::App* leaf = selected_leaf(app);
      const std::vector<std::string> merged = apply_config(args, leaf, common.config);
      app.clear();
      action = nullptr;
      parse(app, merged);
    }
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    return error_json(err, to_string(ErrorKind::kInput), static_cast<int>(ErrorKind::kInput), e.what());
  } catch (const Error& e) {
    return error_json(err, to_string(e.kind()), e.exit_code(), e.what());
  }

  try {
    if (!action) throw InvariantError("no subcommand action selected");
    return action();
  } catch (const Error& e) {
    return error_json(err, to_string(e.kind()), e.exit_code(), e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return error_json(err, to_string(ErrorKind::kInput), static_cast<int>(ErrorKind::kInput), e.what());
  } catch (const std::exception& e) {
    return error_json(err, to_string(ErrorKind::kInvariant), static_cast<int>(ErrorKind::kInvariant),
                      std::string("internal error: ") + e.what());
  }
}

}  // namespace rareval::cli
