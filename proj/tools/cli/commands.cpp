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

#include "cli/commands.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "rareval/common.hpp"
#include "rareval/csv.hpp"
#include "rareval/curves.hpp"
#include "rareval/datamodel.hpp"
#include "rareval/design.hpp"
#include "rareval/metrics.hpp"
#include "rareval/report.hpp"
#include "rareval/robustness.hpp"
#include "rareval/scle.hpp"
#include "rareval/synth.hpp"

namespace rareval::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << content;
}

std::optional<std::string> timestamp(const Common& common) {
  if (common.reproducible) return std::nullopt;
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &utc);
  return std::string(buf);
}

Dataset load(const std::string& input, const std::string& format, const std::string& design) {
  const Format f = format.empty() ? format_from_path(input) : parse_format(format);
  std::optional<fs::path> design_path;
  if (!design.empty()) design_path = design;
  return ingest(input, f, design_path);
}

bool has_scores(const Dataset& ds) {
  return std::any_of(ds.cases().begin(), ds.cases().end(),
                     [](const EvaluationCase& c) { return is_evaluable(c.reference) && c.score; });
}

bool lacks_predictions(const Dataset& ds) {
  return std::any_of(ds.cases().begin(), ds.cases().end(),
                     [](const EvaluationCase& c) { return is_evaluable(c.reference) && !c.predicted; });
}

std::vector<Metric> parse_metrics(const std::vector<std::string>& names) {
  std::vector<Metric> out;
  for (const std::string& n : names) out.push_back(parse_metric(n));
  if (out.empty()) throw InputError("at least one metric is required");
  return out;
}

Dataset without_design(const Dataset& ds) {
  std::vector<EvaluationCase> cases(ds.cases().begin(), ds.cases().end());
  for (EvaluationCase& c : cases) c.stratum_id.reset();
  return Dataset(std::move(cases), {}, ds.metadata());
}

void print(std::ostream& out, const json& j) { out << j.dump(2) << "\n"; }

std::string hash_of_file(const std::string& path) {
  return path.empty() ? std::string() : hex64(fnv1a64(read_file(path)));
}

// Canonical description of a run; its hash is embedded in every output.
json run_config_json(const RunConfig& c, const Common& common, std::string_view command) {
  auto opt = [](const auto& v) { return v ? json(*v) : json(nullptr); };
  json j;
  j["command"] = command;
  j["seed"] = common.seed();
  j["input"] = c.input;
  j["input_fnv1a64"] = hash_of_file(c.input);
  j["format"] = c.format;
  j["design"] = c.design;
  j["design_fnv1a64"] = hash_of_file(c.design);
  j["assumed_prevalence"] = opt(c.assumed_prevalence);
  j["threshold"] = opt(c.threshold);
  j["k"] = opt(c.k);
  j["cost_fp"] = opt(c.cost_fp);
  j["cost_fn"] = opt(c.cost_fn);
  j["metrics"] = c.metrics;
  j["ci_level"] = c.ci_level;
  j["bootstrap_resamples"] = c.bootstrap_resamples;
  j["f1"] = c.f1;
  j["cost_justified"] = c.cost_justified;
  j["recall_enrichment_justified"] = c.recall_enrichment_justified;
  j["scle_sample_fnv1a64"] = hash_of_file(c.scle_sample);
  j["scle_sheet_fnv1a64"] = hash_of_file(c.scle_sheet);
  j["subsets"] = c.subsets;
  j["stability"] = c.stability;
  j["resample_scheme"] = c.resample_scheme;
  j["resamples"] = c.resamples;
  j["resample_metric"] = c.resample_metric;
  j["human_decisions_fnv1a64"] = hash_of_file(c.human_decisions);
  j["attest"] = c.attest;
  return j;
}

bool parse_decision(const std::string& text, std::size_t line) {
  const std::string v = to_lower(text);
  if (v == "1" || v == "true" || v == "yes" || v == "positive") return true;
  if (v == "0" || v == "false" || v == "no" || v == "negative") return false;
  throw InputError("human decisions line " + std::to_string(line) + ": unknown decision '" + text + "'");
}

std::map<std::string, bool> read_decisions(const std::string& path) {
  const std::string text = read_file(path);
  const auto records = csv::read(text);
  if (records.empty()) throw InputError("human decisions file '" + path + "' is empty");
  const auto& header = records[0].fields;
  const auto id_col = std::find(header.begin(), header.end(), "case_id");
  const auto dec_col = std::find(header.begin(), header.end(), "decision");
  if (id_col == header.end() || dec_col == header.end()) {
    throw InputError("human decisions file needs columns case_id and decision");
  }
  const auto id = static_cast<std::size_t>(id_col - header.begin());
  const auto dec = static_cast<std::size_t>(dec_col - header.begin());
  std::map<std::string, bool> out;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& f = records[r].fields;
    if (f.size() != header.size()) {
      throw InputError("human decisions line " + std::to_string(records[r].line) + ": wrong number of fields");
    }
    if (!out.emplace(f[id], parse_decision(f[dec], records[r].line)).second) {
      throw InputError("human decisions: duplicate case_id '" + f[id] + "'");
    }
  }
  return out;
}

struct Collected {
  report::ReportInputs inputs;
  std::optional<double> f1;
};

Collected collect(const RunConfig& c, const Common& common, std::string_view command) {
  Collected result;
  report::ReportInputs& in = result.inputs;
  const std::uint64_t seed = common.seed();
  in.run.command = std::string(command);
  in.run.seed = seed;
  in.run.config_hash = hex64(fnv1a64(run_config_json(c, common, command).dump()));
  in.run.generated_at = timestamp(common);
  in.assumed_prevalence = c.assumed_prevalence;
  in.recall_enrichment_justified = c.recall_enrichment_justified;
  in.cost_justified = c.cost_justified;

  for (const std::string& a : c.attest) {
    const auto eq = a.find('=');
    if (eq == std::string::npos || eq + 1 == a.size()) {
      throw InputError("--attest expects consideration=statement, got '" + a + "'");
    }
    in.attestations[report::parse_consideration(a.substr(0, eq))] = a.substr(eq + 1);
  }
  if (c.cost_fp.has_value() != c.cost_fn.has_value()) {
    throw InputError("--cost-fp and --cost-fn must be given together");
  }
  const IntervalOptions intervals{c.ci_level, c.bootstrap_resamples, seed};

  if (!c.input.empty()) {
    const Dataset ds = load(c.input, c.format, c.design);
    in.dataset = report::describe(ds);
    const int drivers = int(c.threshold.has_value()) + int(c.k.has_value()) + int(c.cost_fp.has_value());
    const bool scored = has_scores(ds);
    if (scored && drivers != 1) {
      throw InputError("scores are present: give exactly one of --threshold, --k, or --cost-fp/--cost-fn");
    }
    if (!scored && drivers > 0) {
      throw InputError("--threshold, --k and --cost-fp/--cost-fn need scored cases");
    }

    Dataset working = ds;
    if (scored) {
      const Curve curve = threshold_sweep(ds);
      in.auc = auc(curve);
      report::OperatingPoint op;
      if (c.threshold) {
        op.method = "threshold";
        op.threshold = *c.threshold;
      } else if (c.k) {
        op.method = "k";
        op.k = *c.k;
        in.precision_at_k = precision_at_k(ds, *c.k, c.ci_level);
        op.threshold = in.precision_at_k->cutoff_score;
      } else {
        if (!c.assumed_prevalence) throw InputError("cost-based selection needs --assumed-prevalence");
        const CostSpec costs{*c.cost_fp, *c.cost_fn};
        validate(costs);
        const CurvePoint best = select_operating_point(curve, costs, *c.assumed_prevalence);
        op.method = "cost";
        op.threshold = best.threshold;
        op.costs = costs;
        op.expected_cost = expected_cost(best, costs, *c.assumed_prevalence);
      }
      in.operating_point = op;
      in.curve = curve;
      working = apply_threshold(ds, op.threshold);
    }

    const ConfusionCounts counts = confusion(working);
    in.counts = counts;
    const std::vector<Metric> metrics = parse_metrics(c.metrics);
    for (Metric m : metrics) in.metrics.push_back(estimate(m, counts, intervals));
    if (working.has_design()) {
      const ConfusionCounts naive = confusion(without_design(working));
      for (Metric m : metrics) in.unweighted_metrics.push_back(estimate(m, naive, intervals));
    }
    const bool benchmarked = std::all_of(working.cases().begin(), working.cases().end(), [](const EvaluationCase& e) {
      return !is_evaluable(e.reference) || e.benchmark_predicted.has_value();
    });
    if (benchmarked && counts.total() > 0) {
      std::vector<EvaluationCase> cases(working.cases().begin(), working.cases().end());
      for (EvaluationCase& e : cases) {
        if (is_evaluable(e.reference)) e.predicted = e.benchmark_predicted;
      }
      const Dataset bench(std::move(cases), {working.design().begin(), working.design().end()}, working.metadata());
      const ConfusionCounts bc = confusion(bench);
      for (Metric m : metrics) in.benchmark_metrics.push_back(estimate(m, bc, intervals));
    }

    const auto recall_value = metric_value(Metric::kRecall, counts);
    const auto precision_value = metric_value(Metric::kPrecision, counts);
    const auto specificity_value = metric_value(Metric::kSpecificity, counts);
    if (c.assumed_prevalence && recall_value && specificity_value) {
      in.projection = report::PrevalenceProjection{
          *recall_value, *specificity_value, *c.assumed_prevalence,
          bayes_adjusted_precision(*recall_value, *specificity_value, *c.assumed_prevalence)};
    }
    if (c.f1 && precision_value && recall_value) result.f1 = f_beta(*precision_value, *recall_value);

    WarningRequest request;
    request.auc_reported = scored;
    request.f1_reported = c.f1;
    request.cost_justified = c.cost_justified || c.cost_fp.has_value();
    request.test_set_prevalence = in.dataset->test_set_prevalence;
    if (c.assumed_prevalence) {
      in.warnings = rare_event_warnings(in.curve ? *in.curve : Curve{}, *c.assumed_prevalence, request);
    } else {
      // Without a deployment prevalence only the F1 rule can fire; a
      // prevalence of 1 keeps the prevalence-based rules silent.
      request.auc_reported = false;
      in.warnings = rare_event_warnings(Curve{}, 1.0, request);
    }

    SubsetOptions subset_options;
    subset_options.intervals = intervals;
    subset_options.seed = seed;
    for (const std::string& attr : c.subsets) {
      in.subsets.push_back(subset_metrics(working, attr, metrics, subset_options));
    }
    if (c.stability) in.stability = stability(ds);
    if (!c.resample_scheme.empty()) {
      in.resampling.push_back(resampling_variability(working, parse_metric(c.resample_metric),
                                                     parse_resampling_scheme(c.resample_scheme), c.resamples,
                                                     seed, c.ci_level));
    }
    if (!c.human_decisions.empty()) {
      in.concordance = concordance_and_override(working, read_decisions(c.human_decisions));
    }
  } else if (!c.subsets.empty() || c.stability || !c.resample_scheme.empty() || !c.human_decisions.empty() ||
             c.threshold || c.k || c.cost_fp) {
    throw InputError("the requested analyses need --input");
  }

  if (c.scle_sample.empty() != c.scle_sheet.empty()) {
    throw InputError("--scle-sample and --scle-sheet must be given together");
  }
  if (!c.scle_sample.empty()) {
    const scle::ScleSample sample = scle::sample_from_json(read_file(c.scle_sample));
    const scle::AnnotationSet annotations = scle::ingest_annotations(fs::path(c.scle_sheet), sample);
    in.scle = scle::aggregate(annotations.annotations, sample, {c.ci_level, c.bootstrap_resamples, seed});
  }
  return result;
}

std::string metrics_text(const report::ReportInputs& in, const std::optional<double>& f1) {
  std::ostringstream s;
  auto num = [](const std::optional<double>& v) { return v ? format_real(*v) : std::string("undefined"); };
  auto block = [&](const std::vector<MetricEstimate>& metrics) {
    for (const MetricEstimate& e : metrics) {
      s << e.metric << " " << num(e.value);
      if (e.ci_low && e.ci_high) {
        s << " [" << format_real(*e.ci_low) << ", " << format_real(*e.ci_high) << "] " << e.interval_method;
      }
      s << (e.weighted ? " weighted" : "") << "\n";
    }
  };
  block(in.metrics);
  if (!in.unweighted_metrics.empty()) {
    s << "# unweighted\n";
    block(in.unweighted_metrics);
  }
  if (!in.benchmark_metrics.empty()) {
    s << "# benchmark\n";
    block(in.benchmark_metrics);
  }
  if (f1) s << "f1 " << format_real(*f1) << "\n";
  if (in.projection) s << "prevalence_projected_precision " << num(in.projection->precision) << "\n";
  if (in.precision_at_k) {
    s << "precision_at_" << in.precision_at_k->k << " " << num(in.precision_at_k->estimate.value) << "\n";
  }
  return s.str();
}

std::string curve_csv(const Curve& curve) {
  std::ostringstream s;
  csv::write_row(s, std::vector<std::string>{"threshold", "recall", "precision", "specificity", "fpr", "predicted_positive_count"});
  for (const CurvePoint& p : curve) {
    csv::write_row(s, std::vector<std::string>{format_real(p.threshold), format_real(p.recall),
                       p.precision ? format_real(*p.precision) : std::string(), format_real(p.specificity),
                       format_real(p.fpr), std::to_string(p.predicted_positive_count)});
  }
  return s.str();
}

std::string require_output_dir(const Common& common, std::string_view command) {
  if (common.output_dir.empty()) {
    throw InputError(std::string(command) + " needs --output-dir (or RAREVAL_OUTPUT_DIR)");
  }
  fs::create_directories(common.output_dir);
  return common.output_dir;
}

json counts_summary(const scle::ScleSample& sample) {
  json cells = json::array();
  for (const scle::CellAllocation& c : sample.cells) {
    cells.push_back({{"cell", c.cell},
                     {"population", c.population},
                     {"requested", c.requested},
                     {"sampled", c.sampled},
                     {"per_stratum", c.per_stratum}});
  }
  return cells;
}

}  // namespace

int cmd_evaluate(const RunConfig& config, const Common& common, std::ostream& out) {
  const fs::path dir = require_output_dir(common, "evaluate");
  const Collected collected = collect(config, common, "evaluate");
  const report::ReportInputs& in = collected.inputs;
  const auto checklist = report::prefill_checklist(in);
  const report::RenderedReport rendered = report::render_report(in, checklist);
  const json doc = json::parse(rendered.json);

  json metrics = {{"run", doc["run"]},
                  {"confusion", doc["confusion"]},
                  {"metrics", doc["metrics"]},
                  {"unweighted_metrics", doc["unweighted_metrics"]},
                  {"benchmark_metrics", doc["benchmark_metrics"]},
                  {"f1", collected.f1 ? json(*collected.f1) : json(nullptr)},
                  {"precision_at_k", doc["precision_at_k"]},
                  {"prevalence_projection", doc["prevalence_projection"]}};
  std::vector<std::string> files = {"metrics.json", "metrics.txt", "warnings.json", "report.json",
                                    "report.md",    "checklist.json", "run_config.json"};
  write_file(dir / "metrics.json", metrics.dump(2) + "\n");
  write_file(dir / "metrics.txt", metrics_text(in, collected.f1));
  write_file(dir / "warnings.json", json{{"run", doc["run"]}, {"warnings", doc["warnings"]}}.dump(2) + "\n");
  if (in.curve) {
    write_file(dir / "curve.csv", curve_csv(*in.curve));
    write_file(dir / "curve.json", json{{"run", doc["run"]}, {"curves", doc["curves"]}}.dump(2) + "\n");
    files.insert(files.begin() + 2, {"curve.csv", "curve.json"});
  }
  write_file(dir / "report.json", rendered.json);
  write_file(dir / "report.md", rendered.markdown);
  write_file(dir / "checklist.json", report::checklist_to_json(checklist) + "\n");
  json run_config = run_config_json(config, common, "evaluate");
  run_config["config_hash"] = in.run.config_hash;
  write_file(dir / "run_config.json", run_config.dump(2) + "\n");

  print(out, {{"command", "evaluate"}, {"config_hash", in.run.config_hash}, {"files", files}});
  return 0;
}

int cmd_checklist(const RunConfig& config, const Common& common, std::ostream& out) {
  const Collected collected = collect(config, common, "checklist");
  const auto checklist = report::prefill_checklist(collected.inputs);
  if (common.output_dir.empty()) {
    out << report::checklist_to_json(checklist) << "\n";
    return 0;
  }
  const fs::path dir = require_output_dir(common, "checklist");
  write_file(dir / "checklist.json", report::checklist_to_json(checklist) + "\n");
  write_file(dir / "checklist.md", report::checklist_to_markdown(checklist));
  print(out, {{"command", "checklist"},
              {"config_hash", collected.inputs.run.config_hash},
              {"files", {"checklist.json", "checklist.md"}}});
  return 0;
}

int cmd_adjust_precision(const AdjustPrecisionOptions& o, const Common&, std::ostream& out) {
  const auto p = bayes_adjusted_precision(o.sensitivity, o.specificity, o.prevalence);
  print(out, {{"operation", "metrics.bayes_adjusted_precision"},
              {"sensitivity", o.sensitivity},
              {"specificity", o.specificity},
              {"prevalence", o.prevalence},
              {"precision", p ? json(*p) : json(nullptr)}});
  return 0;
}

int cmd_size_study(const SizeStudyOptions& o, const Common& common, std::ostream& out) {
  PrecisionStudyAssumptions a;
  a.overlap_rate = o.overlap;
  a.precision_a = o.precision_a;
  a.precision_b = o.precision_b;
  a.alpha = o.alpha;
  a.n_replicates = o.replicates;
  a.seed = common.seed();
  if (o.combined_flags) {
    if (o.flag_rate_a || o.flag_rate_b) throw InputError("give either --combined-flags or the two flag rates");
    if (!o.sample_size) throw InputError("--combined-flags is read at --sample-size, which is required");
    const double rate = flag_rate_from_combined(*o.combined_flags, *o.sample_size, o.overlap,
                                                parse_combined_flags_mode(o.combined_mode));
    a.flag_rate_a = a.flag_rate_b = rate;
  } else {
    if (!o.flag_rate_a || !o.flag_rate_b) throw InputError("give --flag-rate-a and --flag-rate-b, or --combined-flags");
    a.flag_rate_a = *o.flag_rate_a;
    a.flag_rate_b = *o.flag_rate_b;
  }
  // The cell model does not depend on the size; solve mode has none yet.
  a.sample_size = o.sample_size.value_or(o.min_size);
  const FlagCellModel cells = derive_cell_model(a);
  json assumptions = {{"flag_rate_a", a.flag_rate_a}, {"flag_rate_b", a.flag_rate_b},
                      {"overlap_rate", a.overlap_rate}, {"precision_a", a.precision_a},
                      {"precision_b", a.precision_b},  {"alpha", a.alpha},
                      {"replicates", a.n_replicates}};
  json cell_json = {{"p_both", cells.p_both},     {"p_a_only", cells.p_a_only}, {"p_b_only", cells.p_b_only},
                    {"q_shared", cells.q_shared}, {"q_a_only", cells.q_a_only}, {"q_b_only", cells.q_b_only}};
  if (o.target_power) {
    const SampleSizeResult r = solve_sample_size(a, *o.target_power, {o.min_size, o.max_size});
    json probes = json::array();
    for (const auto& [n, p] : r.probes) probes.push_back({{"sample_size", n}, {"power", p}});
    print(out, {{"operation", "design.solve_sample_size"},
                {"seed", a.seed},
                {"assumptions", assumptions},
                {"cell_model", cell_json},
                {"target_power", *o.target_power},
                {"sample_size", r.sample_size},
                {"power", r.power.power},
                {"mc_stderr", r.power.mc_stderr},
                {"probes", probes}});
    return 0;
  }
  if (!o.sample_size) throw InputError("give --sample-size to simulate power or --target-power to solve for size");
  const PowerResult r = simulate_precision_power(a);
  print(out, {{"operation", "design.simulate_precision_power"},
              {"seed", a.seed},
              {"assumptions", assumptions},
              {"cell_model", cell_json},
              {"sample_size", a.sample_size},
              {"power", r.power},
              {"mc_stderr", r.mc_stderr}});
  return 0;
}

int cmd_pair_prevalence(const PairPrevalenceOptions& o, const Common&, std::ostream& out) {
  const PairPrevalence p = pair_prevalence({o.n, o.duplicate_fraction});
  json j = {{"operation", "design.pair_prevalence"},
            {"n", o.n},
            {"duplicate_fraction", o.duplicate_fraction},
            {"prevalence", p.prevalence},
            {"one_in", p.prevalence > 0.0 ? json(1.0 / p.prevalence) : json(nullptr)}};
  if (p.warning) j["warning"] = *p.warning;
  print(out, j);
  return 0;
}

int cmd_scle_sample(const ScleSampleOptions& o, const Common& common, std::ostream& out) {
  Dataset ds = load(o.input, o.format, o.design);
  if (o.threshold && lacks_predictions(ds)) ds = apply_threshold(ds, *o.threshold);
  scle::ScleConfig config;
  config.n_fp = o.n_fp;
  config.n_fn = o.n_fn;
  config.n_tp = o.n_tp;
  config.n_tn = o.n_tn;
  config.substratify_by = o.substratify_by;
  config.boundary_bins = o.boundary_bins;
  config.threshold = o.threshold;
  config.benchmark_mode = o.benchmark_mode;
  config.disagreement_oversample_factor = o.oversample_factor;
  config.seed = common.seed();
  const scle::ScleSample sample = scle::draw_sample(ds, config);

  fs::path sample_path = o.sample_out;
  fs::path sheet_path = o.sheet_out;
  if (!common.output_dir.empty()) {
    if (sample_path.empty()) sample_path = fs::path(common.output_dir) / "scle_sample.json";
    if (sheet_path.empty()) sheet_path = fs::path(common.output_dir) / "review_sheet.csv";
  }
  json summary = {{"operation", "scle.draw_sample"},
                  {"seed", config.seed},
                  {"config_hash", sample.config_hash},
                  {"cells", counts_summary(sample)},
                  {"warnings", sample.warnings}};
  if (!sample_path.empty()) {
    write_file(sample_path, scle::sample_to_json(sample) + "\n");
    summary["sample"] = sample_path.string();
  }
  if (!sheet_path.empty()) {
    if (sheet_path.has_parent_path()) fs::create_directories(sheet_path.parent_path());
    scle::emit_review_sheet(sample, ds, {o.context_fields, timestamp(common)}, sheet_path);
    summary["sheet"] = sheet_path.string();
  }
  if (sample_path.empty()) {
    out << scle::sample_to_json(sample) << "\n";
    return 0;
  }
  print(out, summary);
  return 0;
}

int cmd_scle_ingest(const ScleSheetOptions& o, const Common&, std::ostream& out) {
  const scle::ScleSample sample = scle::sample_from_json(read_file(o.sample));
  const scle::AnnotationSet set = scle::ingest_annotations(fs::path(o.sheet), sample);
  json ids = json::array();
  for (const scle::ScleAnnotation& a : set.annotations) ids.push_back(a.case_id);
  print(out, {{"operation", "scle.ingest_annotations"},
              {"config_hash", sample.config_hash},
              {"annotations", set.annotations.size()},
              {"annotated_case_ids", ids},
              {"warnings", set.warnings}});
  return 0;
}

int cmd_scle_aggregate(const ScleSheetOptions& o, const Common& common, std::ostream& out) {
  const scle::ScleSample sample = scle::sample_from_json(read_file(o.sample));
  const scle::AnnotationSet set = scle::ingest_annotations(fs::path(o.sheet), sample);
  const scle::ScleSummary summary =
      scle::aggregate(set.annotations, sample, {o.ci_level, o.bootstrap_resamples, common.seed()});
  const std::string summary_json = scle::summary_to_json(summary);
  if (!common.output_dir.empty()) {
    const fs::path dir = require_output_dir(common, "scle aggregate");
    write_file(dir / "scle_summary.json", summary_json + "\n");
    write_file(dir / "scle_summary.md", scle::summary_to_markdown(summary));
  }
  json j = {{"operation", "scle.aggregate"}, {"seed", common.seed()}, {"config_hash", sample.config_hash}};
  j["ingest_warnings"] = set.warnings;
  j["summary"] = json::parse(summary_json);
  print(out, j);
  return 0;
}

int cmd_scle_apply_verdicts(const ScleSheetOptions& o, const Common&, std::ostream& out) {
  const scle::ScleSample sample = scle::sample_from_json(read_file(o.sample));
  const scle::AnnotationSet set = scle::ingest_annotations(fs::path(o.sheet), sample);
  const Dataset ds = load(o.input, o.format, o.design);
  const Dataset revised = scle::apply_verdicts(ds, set.annotations);
  emit(revised, o.output, format_from_path(o.output));
  print(out, {{"operation", "scle.apply_verdicts"},
              {"output", o.output},
              {"revision", revised.metadata().at("revision")},
              {"note", revised.metadata().at("revision_note")}});
  return 0;
}

namespace {

Dataset load_for_robustness(const RobustnessOptions& o) {
  Dataset ds = load(o.input, o.format, o.design);
  if (o.threshold) ds = apply_threshold(ds, *o.threshold);
  return ds;
}

}  // namespace

int cmd_subsets(const RobustnessOptions& o, const Common& common, std::ostream& out) {
  const Dataset ds = load_for_robustness(o);
  SubsetOptions options;
  options.intervals = {o.ci_level, 2000, common.seed()};
  options.alpha = o.alpha;
  options.permutations = o.permutations;
  options.seed = common.seed();
  const SubsetReport r = subset_metrics(ds, o.attribute, parse_metrics(o.metrics), options);
  json j = {{"operation", "robustness.subset_metrics"}, {"seed", common.seed()}};
  j.update(json::parse(to_json(r)));
  print(out, j);
  return 0;
}

int cmd_stability(const RobustnessOptions& o, const Common&, std::ostream& out) {
  const Dataset ds = load(o.input, o.format, o.design);
  json j = {{"operation", "robustness.stability"}};
  j.update(json::parse(to_json(stability(ds))));
  print(out, j);
  return 0;
}

int cmd_resample(const RobustnessOptions& o, const Common& common, std::ostream& out) {
  const Dataset ds = load_for_robustness(o);
  const ResamplingSummary s = resampling_variability(ds, parse_metric(o.metric), parse_resampling_scheme(o.scheme),
                                                     o.n, common.seed(), o.ci_level);
  json j = {{"operation", "robustness.resampling_variability"}};
  j.update(json::parse(to_json(s)));
  print(out, j);
  return 0;
}

int cmd_synth(const SynthOptions& o, const Common& common, std::ostream& out) {
  json spec = o.spec.empty() ? json::object() : json::parse(read_file(o.spec), nullptr, false);
  if (spec.is_discarded() || !spec.is_object()) throw InputError("synth spec '" + o.spec + "' is not a JSON object");
  if (o.n) spec["n"] = *o.n;
  if (o.prevalence) spec["prevalence"] = *o.prevalence;
  if (o.fixed_count) spec["fixed_count"] = true;
  if (!o.family.empty()) spec["family"] = o.family;
  if (o.separation) spec["separation"] = *o.separation;
  if (o.score_decimals) spec["score_decimals"] = *o.score_decimals;
  if (o.threshold) spec["threshold"] = *o.threshold;
  if (o.label_noise) spec["label_noise"] = *o.label_noise;
  if (o.n_runs) spec["n_runs"] = *o.n_runs;
  if (o.flip_probability) spec["flip_probability"] = *o.flip_probability;
  if (o.benchmark_flip_probability) spec["benchmark_flip_probability"] = *o.benchmark_flip_probability;
  if (!o.enrich.empty()) {
    spec["enrichment"] = json::array();
    for (const std::string& rule : o.enrich) {
      const auto colon = rule.find(':');
      const std::optional<double> p = colon == std::string::npos ? std::nullopt : parse_real(rule.substr(colon + 1));
      if (!p) throw InputError("--enrich expects selector:probability, got '" + rule + "'");
      spec["enrichment"].push_back({{"selector", rule.substr(0, colon)}, {"inclusion_probability", *p}});
    }
  }
  if (!o.subgroup.empty()) {
    spec["subgroups"] = json::array();
    for (const std::string& g : o.subgroup) {
      const auto colon = g.find(':');
      if (colon == std::string::npos || colon == 0) throw InputError("--subgroup expects name:cat1|cat2, got '" + g + "'");
      std::vector<std::string> cats;
      std::stringstream ss(g.substr(colon + 1));
      for (std::string cat; std::getline(ss, cat, '|');) cats.push_back(cat);
      spec["subgroups"].push_back({{"name", g.substr(0, colon)}, {"categories", cats}});
    }
  }
  if (!o.truth_thresholds.empty()) spec["truth_thresholds"] = o.truth_thresholds;
  if (common.seed_flag || !spec.contains("seed")) spec["seed"] = common.seed();

  const synth::PopulationSpec ps = synth::population_spec_from_json(spec.dump());
  const synth::Generated g = synth::generate(ps);
  const fs::path output = o.output;
  if (output.has_parent_path()) fs::create_directories(output.parent_path());
  emit(g.dataset, output, format_from_path(output));
  const fs::path truth = o.truth_out.empty() ? fs::path(o.output + ".truth.json") : fs::path(o.truth_out);
  synth::write_truth_sidecar(truth, ps, g.truth);
  const LabelCounts counts = count_labels(g.dataset);
  print(out, {{"operation", "synth.generate"},
              {"seed", ps.seed},
              {"output", output.string()},
              {"truth", truth.string()},
              {"cases", g.dataset.size()},
              {"positives", counts.positive},
              {"negatives", counts.negative},
              {"population_positives", g.truth.positives()}});
  return 0;
}

}  // namespace rareval::cli
