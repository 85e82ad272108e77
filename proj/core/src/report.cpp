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

#include "rareval/report.hpp"

#include <algorithm>
#include <array>
#include <set>
#include <sstream>

#include "json_io.hpp"
#include "rareval/common.hpp"
#include "rareval/version.hpp"

namespace rareval::report {
namespace {

using detail::json;
using detail::optional_json;

struct Row {
  Consideration consideration;
  std::string_view name;
  std::string_view questions;
  bool qualitative;  // capped at partial without an attestation
};

constexpr std::array<Row, kConsiderationCount> kRows = {{
    {Consideration::kTestSets, "test_sets",
     "Do the available test sets match the intended use in content and scope, and are they big and "
     "varied enough? Do they hold enough positive and negative controls, representative of what is in "
     "and out of scope?",
     true},
    {Consideration::kAnnotationProcess, "annotation_process",
     "How were positive and negative controls defined, how was annotation quality and consistency "
     "ensured and measured, and how were edge cases handled?",
     true},
    {Consideration::kMetrics, "metrics",
     "Which performance metrics are reported, do they fit the intended use, and do they jointly cover "
     "the relevant aspects (false positives, false negatives, stability)?",
     true},
    {Consideration::kRecall, "recall",
     "If recall is reported, do the test sets span the full range of positive controls (types, "
     "difficulty)? Is any enrichment with positive controls corrected for?",
     false},
    {Consideration::kPrecision, "precision",
     "If precision is reported, how does the test-set prevalence of positive controls compare with the "
     "intended use? Is any enrichment with positive controls corrected for?",
     false},
    {Consideration::kSpecificity, "specificity",
     "If specificity is reported, is it high enough for the intended operating point, and is the "
     "estimate reliable?",
     false},
    {Consideration::kDecisionThresholds, "decision_thresholds",
     "Which decision thresholds were evaluated, and do they fit the intended use and the relative costs "
     "of errors?",
     false},
    {Consideration::kBenchmarks, "benchmarks",
     "Was the model compared with relevant benchmark methods run at their best? Are benchmark test sets "
     "for the intended use available, and is the model's performance on them sufficient?",
     true},
    {Consideration::kRobustness, "robustness",
     "Does the model hold up under varying conditions and across relevant subsets? Are measures in "
     "place to detect and respond to data, model or performance drift?",
     true},
    {Consideration::kNonTriviality, "non_triviality",
     "Do the true positives the model finds show that it can detect non-trivial events of interest?",
     false},
    {Consideration::kTypesOfErrors, "types_of_errors",
     "What kinds of false positives and false negatives occur? Are they understandable and acceptable "
     "for the intended use, or do they raise validity or fairness concerns?",
     true},
    {Consideration::kHumanAiInteraction, "human_ai_interaction",
     "What human-AI interaction is intended, and does the performance evaluation account for it?",
     true},
}};

constexpr std::array<std::string_view, 5> kStatusNames = {
    "satisfied", "partial", "unsatisfied", "not_applicable", "external_evidence_required"};

// Shortest round-trip form; the Markdown uses the same text as the JSON.
std::string num(double v) { return detail::real_json(v).dump(); }
template <typename T>
std::string num(const std::optional<T>& v) {
  return v ? json(*v).dump() : std::string("n/a");
}

const MetricEstimate* find_metric(const std::vector<MetricEstimate>& metrics, Metric m) {
  const std::string name(to_string(m));
  for (const MetricEstimate& e : metrics) {
    if (e.metric == name && e.defined()) return &e;
  }
  return nullptr;
}

std::string metric_evidence(const MetricEstimate& e) {
  std::string s = "metrics." + e.metric + "=" + num(e.value);
  if (e.ci_low && e.ci_high) s += " [" + num(e.ci_low) + ", " + num(e.ci_high) + "]";
  s += e.weighted ? " (weighted)" : " (unweighted)";
  return s;
}

ChecklistItem make(Consideration c, Status status, std::vector<std::string> evidence,
                   std::string rationale) {
  return {c, std::string(key_questions(c)), status, std::move(evidence), std::move(rationale)};
}

ChecklistItem test_sets(const ReportInputs& in) {
  if (!in.dataset) {
    return make(Consideration::kTestSets, Status::kUnsatisfied, {}, "no dataset descriptives recorded");
  }
  const DatasetSummary& d = *in.dataset;
  std::vector<std::string> ev = {"dataset.descriptives: " + std::to_string(d.positives) + " positive, " +
                                 std::to_string(d.negatives) + " negative, " + std::to_string(d.ambiguous) +
                                 " ambiguous, " + std::to_string(d.excluded) + " excluded"};
  if (!d.strata.empty()) ev.push_back("dataset.strata: " + std::to_string(d.strata.size()) + " design strata");
  return make(Consideration::kTestSets, Status::kPartial, std::move(ev),
              "composition recorded; fit to the intended use needs attestation");
}

ChecklistItem annotation_process(const ReportInputs& in) {
  if (!in.dataset) {
    return make(Consideration::kAnnotationProcess, Status::kUnsatisfied, {},
                "no reference-label information recorded");
  }
  std::vector<std::string> ev = {"dataset.ambiguous=" + std::to_string(in.dataset->ambiguous)};
  if (in.dataset->revision > 0) ev.push_back("dataset.revision=" + std::to_string(in.dataset->revision));
  if (in.scle && !in.scle->verdicts.empty()) {
    ev.push_back("scle.verdicts=" + std::to_string(in.scle->verdicts.size()));
  }
  return make(Consideration::kAnnotationProcess, Status::kPartial, std::move(ev),
              "annotation criteria and quality assurance need attestation");
}

ChecklistItem metrics_row(const ReportInputs& in) {
  if (in.metrics.empty()) {
    return make(Consideration::kMetrics, Status::kUnsatisfied, {}, "no performance metrics computed");
  }
  std::vector<std::string> ev;
  for (const MetricEstimate& e : in.metrics) ev.push_back("metrics." + e.metric);
  if (in.precision_at_k) ev.push_back("metrics.precision_at_k");
  if (in.stability) ev.push_back("robustness.stability");
  return make(Consideration::kMetrics, Status::kPartial, std::move(ev),
              "relevance of the metric set to the intended use needs attestation");
}

ChecklistItem recall_row(const ReportInputs& in) {
  const MetricEstimate* r = find_metric(in.metrics, Metric::kRecall);
  if (!r) return make(Consideration::kRecall, Status::kUnsatisfied, {}, "recall not evaluated");
  std::vector<std::string> ev = {metric_evidence(*r)};
  const bool weighted = in.dataset && !in.dataset->strata.empty();
  if (weighted) {
    ev.push_back("dataset.design: inverse-probability weighting applied");
    return make(Consideration::kRecall, Status::kSatisfied, std::move(ev), "");
  }
  if (in.recall_enrichment_justified) {
    ev.push_back("run.recall_enrichment_justified=true");
    return make(Consideration::kRecall, Status::kSatisfied, std::move(ev), "");
  }
  return make(Consideration::kRecall, Status::kPartial, std::move(ev),
              "enrichment with positive controls is not accounted for (no sampling design or justification)");
}

ChecklistItem precision_row(const ReportInputs& in) {
  const MetricEstimate* p = find_metric(in.metrics, Metric::kPrecision);
  if (!p) return make(Consideration::kPrecision, Status::kUnsatisfied, {}, "precision not evaluated");
  std::vector<std::string> ev = {metric_evidence(*p)};
  const std::optional<double> test_prev = in.dataset ? in.dataset->test_set_prevalence : std::nullopt;
  if (test_prev) ev.push_back("dataset.test_set_prevalence=" + num(*test_prev));
  if (!in.assumed_prevalence) {
    return make(Consideration::kPrecision, Status::kPartial, std::move(ev),
                "assumed deployment prevalence not stated");
  }
  ev.push_back("run.assumed_prevalence=" + num(*in.assumed_prevalence));
  bool enriched = false;
  if (test_prev && *in.assumed_prevalence > 0.0) {
    const double ratio = *test_prev / *in.assumed_prevalence;
    ev.push_back("precision.prevalence_ratio=" + num(ratio));
    enriched = ratio > WarningConfig{}.enrichment_ratio_limit;
  }
  for (const Warning& w : in.warnings) {
    if (w.code == kWarnEnrichment) {
      enriched = true;
      ev.push_back(std::string("warnings.") + kWarnEnrichment);
    }
  }
  if (!enriched) return make(Consideration::kPrecision, Status::kSatisfied, std::move(ev), "");
  const bool weighted = in.dataset && !in.dataset->strata.empty();
  if (in.projection && in.projection->precision) {
    ev.push_back("metrics.prevalence_projected_precision=" + num(in.projection->precision));
  }
  if (weighted || (in.projection && in.projection->precision)) {
    return make(Consideration::kPrecision, Status::kSatisfied, std::move(ev), "");
  }
  return make(Consideration::kPrecision, Status::kPartial, std::move(ev),
              "test set is enriched relative to deployment and precision is not corrected");
}

ChecklistItem specificity_row(const ReportInputs& in) {
  const MetricEstimate* s = find_metric(in.metrics, Metric::kSpecificity);
  if (!s) return make(Consideration::kSpecificity, Status::kUnsatisfied, {}, "specificity not evaluated");
  if (!s->ci_low) {
    return make(Consideration::kSpecificity, Status::kPartial, {metric_evidence(*s)},
                "no confidence interval for specificity");
  }
  return make(Consideration::kSpecificity, Status::kSatisfied, {metric_evidence(*s)}, "");
}

ChecklistItem thresholds_row(const ReportInputs& in) {
  std::vector<std::string> ev;
  if (in.curve) ev.push_back("curves.threshold_sweep: " + std::to_string(in.curve->size()) + " points");
  if (!in.operating_point) {
    if (ev.empty()) {
      return make(Consideration::kDecisionThresholds, Status::kUnsatisfied, {}, "no thresholds evaluated");
    }
    return make(Consideration::kDecisionThresholds, Status::kPartial, std::move(ev),
                "no operating point selected");
  }
  const OperatingPoint& op = *in.operating_point;
  ev.push_back("operating_point." + op.method + ": threshold=" + num(op.threshold));
  if (op.method == "cost" || in.cost_justified) {
    if (op.costs) {
      ev.push_back("costs: fp=" + num(op.costs->cost_fp) + ", fn=" + num(op.costs->cost_fn));
    }
    return make(Consideration::kDecisionThresholds, Status::kSatisfied, std::move(ev), "");
  }
  return make(Consideration::kDecisionThresholds, Status::kPartial, std::move(ev),
              "operating point not tied to relative error costs");
}

ChecklistItem benchmarks_row(const ReportInputs& in) {
  if (in.benchmark_metrics.empty()) {
    return make(Consideration::kBenchmarks, Status::kUnsatisfied, {}, "no benchmark comparison");
  }
  std::vector<std::string> ev;
  for (const MetricEstimate& e : in.benchmark_metrics) ev.push_back("benchmark." + e.metric + "=" + num(e.value));
  return make(Consideration::kBenchmarks, Status::kPartial, std::move(ev),
              "benchmark tuning and benchmark test-set relevance need attestation");
}

ChecklistItem robustness_row(const ReportInputs& in) {
  std::vector<std::string> ev;
  for (const SubsetReport& s : in.subsets) {
    ev.push_back("robustness.subsets." + s.attribute + ": " + s.heterogeneity.test + " p=" +
                 num(s.heterogeneity.p_value));
  }
  if (in.stability) ev.push_back("robustness.stability: unanimity=" + num(in.stability->unanimity_rate));
  for (const ResamplingSummary& r : in.resampling) {
    ev.push_back("robustness.resampling." + r.metric + " (" + std::string(to_string(r.scheme)) + ")");
  }
  if (in.subsets.empty()) {
    return make(Consideration::kRobustness, Status::kUnsatisfied, std::move(ev),
                "missing subset breakdown; drift monitoring needs external evidence");
  }
  return make(Consideration::kRobustness, Status::kPartial, std::move(ev),
              "drift monitoring needs external evidence");
}

ChecklistItem non_triviality_row(const ReportInputs& in) {
  if (!in.scle || in.scle->triviality.sampled_tp == 0 || !in.scle->triviality.rate) {
    return make(Consideration::kNonTriviality, Status::kUnsatisfied, {},
                "no case-level triviality rating of true positives");
  }
  const scle::TrivialitySummary& t = in.scle->triviality;
  std::vector<std::string> ev = {"scle.triviality_rate=" + num(t.rate) + " [" + num(t.ci_low) + ", " +
                                 num(t.ci_high) + "] over " + std::to_string(t.sampled_tp) + " sampled TPs"};
  if (t.missing > 0) {
    return make(Consideration::kNonTriviality, Status::kPartial, std::move(ev),
                std::to_string(t.missing) + " sampled TPs lack a triviality rating");
  }
  return make(Consideration::kNonTriviality, Status::kSatisfied, std::move(ev), "");
}

ChecklistItem types_of_errors_row(const ReportInputs& in) {
  std::vector<std::string> ev;
  if (in.scle) {
    for (const scle::CellSummary& c : in.scle->cells) {
      if (c.cell != "TP" && c.cell != "TN") ev.push_back("scle.cell." + c.cell + ": " + std::to_string(c.sample_size) + " examined");
    }
    ev.push_back("scle.never_events=" + std::to_string(in.scle->never_events.size()));
  }
  if (ev.size() <= 1) {
    return make(Consideration::kTypesOfErrors, Status::kUnsatisfied, std::move(ev),
                "no case-level examination of false positives or false negatives");
  }
  return make(Consideration::kTypesOfErrors, Status::kPartial, std::move(ev),
              "acceptability of the observed errors needs attestation");
}

ChecklistItem human_ai_row(const ReportInputs& in) {
  if (in.concordance) {
    return make(Consideration::kHumanAiInteraction, Status::kPartial,
                {"human_ai.concordance=" + num(in.concordance->concordance),
                 "human_ai.override_rate=" + num(in.concordance->override_rate)},
                "intended interaction needs attestation");
  }
  return make(Consideration::kHumanAiInteraction, Status::kExternalEvidenceRequired, {},
              "intended human-AI interaction cannot be assessed from model outputs");
}

json metric_json(const MetricEstimate& e, const std::string& prefix, std::uint64_t seed) {
  json j = {{"id", prefix + e.metric}, {"operation", "metrics.estimate"}, {"seed", seed}};
  j.update(detail::to_json(e));
  return j;
}

void metric_table(std::ostringstream& md, const std::vector<MetricEstimate>& metrics) {
  md << "| Metric | Value | CI low | CI high | Interval | n effective | Weighted |\n";
  md << "|---|---|---|---|---|---|---|\n";
  for (const MetricEstimate& e : metrics) {
    md << "| " << e.metric << " | " << num(e.value) << " | " << num(e.ci_low) << " | " << num(e.ci_high)
       << " | " << e.interval_method << " | " << num(e.n_effective) << " | " << (e.weighted ? "yes" : "no")
       << " |\n";
  }
}

std::string_view status_label(Status s) { return to_string(s); }

}  // namespace

std::string_view to_string(Consideration c) { return kRows[static_cast<std::size_t>(c)].name; }
std::string_view to_string(Status s) { return kStatusNames[static_cast<std::size_t>(s)]; }
std::string_view key_questions(Consideration c) { return kRows[static_cast<std::size_t>(c)].questions; }

Consideration parse_consideration(std::string_view text) {
  for (const Row& r : kRows) {
    if (r.name == text) return r.consideration;
  }
  throw InputError("unknown checklist consideration '" + std::string(text) + "'");
}

Status parse_status(std::string_view text) {
  for (std::size_t i = 0; i < kStatusNames.size(); ++i) {
    if (kStatusNames[i] == text) return static_cast<Status>(i);
  }
  throw InputError("unknown checklist status '" + std::string(text) + "'");
}

DatasetSummary describe(const Dataset& dataset) {
  DatasetSummary d;
  const LabelCounts counts = count_labels(dataset);
  d.n = dataset.size();
  d.positives = counts.positive;
  d.negatives = counts.negative;
  d.ambiguous = counts.ambiguous;
  d.excluded = counts.excluded;
  if (d.positives + d.negatives > 0) {
    d.test_set_prevalence = static_cast<double>(d.positives) / static_cast<double>(d.positives + d.negatives);
  }
  d.strata.assign(dataset.design().begin(), dataset.design().end());
  if (dataset.has_design()) {
    double pos = 0.0, all = 0.0;
    for (const EvaluationCase& c : dataset.cases()) {
      if (!is_evaluable(c.reference)) continue;
      const double w = dataset.weight(c);
      all += w;
      if (c.reference == ReferenceLabel::kPositive) pos += w;
    }
    if (all > 0.0) d.weighted_prevalence = pos / all;
  }
  if (auto it = dataset.metadata().find("revision"); it != dataset.metadata().end()) {
    try {
      d.revision = std::stoul(it->second);
    } catch (const std::exception&) {
      d.revision = 0;
    }
  }
  return d;
}

std::vector<ChecklistItem> prefill_checklist(const ReportInputs& in) {
  std::vector<ChecklistItem> items = {
      test_sets(in),      annotation_process(in), metrics_row(in),    recall_row(in),
      precision_row(in),  specificity_row(in),    thresholds_row(in), benchmarks_row(in),
      robustness_row(in), non_triviality_row(in), types_of_errors_row(in), human_ai_row(in)};
  for (ChecklistItem& item : items) {
    auto it = in.attestations.find(item.consideration);
    if (it == in.attestations.end()) continue;
    item.evidence.push_back("attestation: " + it->second);
    // An attestation completes a row that has evidence; it cannot stand in
    // for an analysis that was never run.
    const bool qualitative = kRows[static_cast<std::size_t>(item.consideration)].qualitative;
    if (qualitative && (item.status == Status::kPartial || item.status == Status::kExternalEvidenceRequired)) {
      item.status = Status::kSatisfied;
      item.rationale.clear();
    }
  }
  check_checklist(items);
  return items;
}

void check_checklist(const std::vector<ChecklistItem>& checklist) {
  if (checklist.size() != kConsiderationCount) {
    throw InvariantError("checklist has " + std::to_string(checklist.size()) + " rows, expected 12");
  }
  std::set<Consideration> seen;
  for (const ChecklistItem& item : checklist) {
    if (!seen.insert(item.consideration).second) {
      throw InvariantError("checklist row '" + std::string(to_string(item.consideration)) + "' appears twice");
    }
    if (item.status != Status::kSatisfied && item.rationale.empty()) {
      throw InvariantError("checklist row '" + std::string(to_string(item.consideration)) +
                           "' is not satisfied but has no rationale");
    }
  }
}

std::string checklist_to_json(const std::vector<ChecklistItem>& checklist) {
  json j = json::array();
  for (const ChecklistItem& item : checklist) {
    j.push_back({{"consideration", to_string(item.consideration)},
                 {"key_questions", item.key_questions},
                 {"status", to_string(item.status)},
                 {"evidence", item.evidence},
                 {"rationale", item.rationale}});
  }
  return j.dump(2);
}

std::string checklist_to_markdown(const std::vector<ChecklistItem>& checklist) {
  std::ostringstream md;
  md << "| Consideration | Status | Evidence | Rationale |\n|---|---|---|---|\n";
  for (const ChecklistItem& item : checklist) {
    std::string evidence;
    for (const std::string& e : item.evidence) evidence += (evidence.empty() ? "" : "<br>") + e;
    md << "| " << to_string(item.consideration) << " | " << status_label(item.status) << " | "
       << (evidence.empty() ? "none" : evidence) << " | " << (item.rationale.empty() ? "-" : item.rationale)
       << " |\n";
  }
  return md.str();
}

RenderedReport render_report(const ReportInputs& in, const std::vector<ChecklistItem>& checklist) {
  check_checklist(checklist);
  const std::uint64_t seed = in.run.seed;
  json j;
  j["schema"] = kSchemaId;
  j["schema_version"] = kSchemaVersion;
  j["tool"] = {{"name", "rareval"}, {"version", kVersion}};
  json run = {{"command", in.run.command}, {"seed", seed}, {"config_hash", in.run.config_hash}};
  if (in.run.generated_at) run["generated_at"] = *in.run.generated_at;
  j["run"] = run;

  if (in.dataset) {
    const DatasetSummary& d = *in.dataset;
    json strata = json::array();
    for (const StratumSpec& s : d.strata) {
      strata.push_back({{"stratum_id", s.stratum_id},
                        {"inclusion_probability", s.inclusion_probability},
                        {"description", s.description}});
    }
    j["dataset"] = {{"operation", "datamodel.ingest"},
                    {"n", d.n},
                    {"positives", d.positives},
                    {"negatives", d.negatives},
                    {"ambiguous", d.ambiguous},
                    {"excluded", d.excluded},
                    {"test_set_prevalence", optional_json(d.test_set_prevalence)},
                    {"weighted_prevalence", optional_json(d.weighted_prevalence)},
                    {"revision", d.revision},
                    {"strata", strata}};
  } else {
    j["dataset"] = nullptr;
  }

  j["metrics"] = json::array();
  for (const MetricEstimate& e : in.metrics) j["metrics"].push_back(metric_json(e, "metrics.", seed));
  j["unweighted_metrics"] = json::array();
  for (const MetricEstimate& e : in.unweighted_metrics) {
    j["unweighted_metrics"].push_back(metric_json(e, "metrics.unweighted.", seed));
  }
  j["benchmark_metrics"] = json::array();
  for (const MetricEstimate& e : in.benchmark_metrics) {
    j["benchmark_metrics"].push_back(metric_json(e, "benchmark.", seed));
  }
  j["confusion"] = in.counts ? detail::to_json(*in.counts) : json(nullptr);

  if (in.precision_at_k) {
    const PrecisionAtK& p = *in.precision_at_k;
    j["precision_at_k"] = {{"operation", "metrics.precision_at_k"},
                           {"k", p.k},
                           {"cutoff_score", p.cutoff_score},
                           {"ties_straddle_cut", p.ties_straddle_cut},
                           {"ambiguous_in_top_k", p.ambiguous_in_top_k},
                           {"estimate", detail::to_json(p.estimate)}};
  } else {
    j["precision_at_k"] = nullptr;
  }
  j["assumed_prevalence"] = optional_json(in.assumed_prevalence);
  if (in.projection) {
    j["prevalence_projection"] = {{"operation", "metrics.bayes_adjusted_precision"},
                                  {"sensitivity", in.projection->sensitivity},
                                  {"specificity", in.projection->specificity},
                                  {"assumed_prevalence", in.projection->assumed_prevalence},
                                  {"precision", optional_json(in.projection->precision)}};
  } else {
    j["prevalence_projection"] = nullptr;
  }

  if (in.curve) {
    json points = json::array();
    for (const CurvePoint& p : *in.curve) points.push_back(detail::to_json(p));
    json curves = {{"operation", "curves.threshold_sweep"},
                   {"points", points},
                   {"auc", optional_json(in.auc)}};
    if (in.operating_point) {
      const OperatingPoint& op = *in.operating_point;
      curves["operating_point"] = {
          {"method", op.method},
          {"threshold", detail::real_json(op.threshold)},
          {"k", optional_json(op.k)},
          {"cost_fp", op.costs ? json(op.costs->cost_fp) : json(nullptr)},
          {"cost_fn", op.costs ? json(op.costs->cost_fn) : json(nullptr)},
          {"expected_cost", optional_json(op.expected_cost)}};
    } else {
      curves["operating_point"] = nullptr;
    }
    j["curves"] = curves;
  } else {
    j["curves"] = nullptr;
  }

  j["warnings"] = json::array();
  for (const Warning& w : in.warnings) j["warnings"].push_back(detail::to_json(w));

  if (in.scle) {
    json s = json::parse(scle::summary_to_json(*in.scle));
    j["scle"] = {{"operation", "scle.aggregate"}, {"seed", seed}, {"summary", s}};
  } else {
    j["scle"] = nullptr;
  }

  json robustness = {{"subsets", json::array()}, {"stability", nullptr}, {"resampling", json::array()}};
  for (const SubsetReport& s : in.subsets) {
    json r = {{"operation", "robustness.subset_metrics"}, {"seed", seed}};
    r.update(json::parse(to_json(s)));
    robustness["subsets"].push_back(r);
  }
  if (in.stability) {
    json r = {{"operation", "robustness.stability"}};
    r.update(json::parse(to_json(*in.stability)));
    robustness["stability"] = r;
  }
  for (const ResamplingSummary& s : in.resampling) {
    json r = {{"operation", "robustness.resampling_variability"}};
    r.update(json::parse(to_json(s)));
    robustness["resampling"].push_back(r);
  }
  j["robustness"] = robustness;

  if (in.concordance) {
    j["human_ai"] = {{"operation", "metrics.concordance_and_override"},
                     {"n", in.concordance->n},
                     {"concordance", in.concordance->concordance},
                     {"override_rate", in.concordance->override_rate}};
  } else {
    j["human_ai"] = nullptr;
  }
  j["checklist"] = json::parse(checklist_to_json(checklist));

  RenderedReport out;
  out.json = j.dump(2) + "\n";

  std::ostringstream md;
  md << "# Evaluation report\n\n";
  md << "- Schema: " << kSchemaId << " " << kSchemaVersion << "\n";
  md << "- Tool: rareval " << kVersion << "\n";
  md << "- Command: " << in.run.command << "\n";
  md << "- Seed: " << seed << "\n";
  md << "- Config hash: " << in.run.config_hash << "\n";
  if (in.run.generated_at) md << "- Generated at: " << *in.run.generated_at << "\n";

  md << "\n## Dataset\n\n";
  if (in.dataset) {
    const DatasetSummary& d = *in.dataset;
    md << "| Cases | Positive | Negative | Ambiguous | Excluded | Test-set prevalence | Weighted prevalence |\n";
    md << "|---|---|---|---|---|---|---|\n";
    md << "| " << d.n << " | " << d.positives << " | " << d.negatives << " | " << d.ambiguous << " | "
       << d.excluded << " | " << num(d.test_set_prevalence) << " | " << num(d.weighted_prevalence) << " |\n";
    if (!d.strata.empty()) {
      md << "\n| Stratum | Inclusion probability | Description |\n|---|---|---|\n";
      for (const StratumSpec& s : d.strata) {
        md << "| " << s.stratum_id << " | " << num(s.inclusion_probability) << " | " << s.description << " |\n";
      }
    }
  } else {
    md << "No dataset.\n";
  }

  md << "\n## Metrics\n\n";
  if (in.metrics.empty()) {
    md << "No metrics computed.\n";
  } else {
    metric_table(md, in.metrics);
  }
  if (!in.unweighted_metrics.empty()) {
    md << "\nUnweighted (naive) estimates, shown for comparison:\n\n";
    metric_table(md, in.unweighted_metrics);
  }
  if (!in.benchmark_metrics.empty()) {
    md << "\nBenchmark method:\n\n";
    metric_table(md, in.benchmark_metrics);
  }
  if (in.assumed_prevalence) md << "\nAssumed deployment prevalence: " << num(*in.assumed_prevalence) << "\n";
  if (in.projection) {
    md << "\nPrecision projected to deployment prevalence: " << num(in.projection->precision)
       << " (sensitivity " << num(in.projection->sensitivity) << ", specificity "
       << num(in.projection->specificity) << ")\n";
  }
  if (in.precision_at_k) {
    const PrecisionAtK& p = *in.precision_at_k;
    md << "\nPrecision at k=" << p.k << ": " << num(p.estimate.value) << " [" << num(p.estimate.ci_low) << ", "
       << num(p.estimate.ci_high) << "]; ambiguous in top k: " << p.ambiguous_in_top_k
       << (p.ties_straddle_cut ? "; tied scores straddle the cut" : "") << "\n";
  }

  md << "\n## Curves\n\n";
  if (in.curve) {
    md << "Threshold sweep with " << in.curve->size() << " points; AUC " << num(in.auc) << ".\n";
    if (in.operating_point) {
      const OperatingPoint& op = *in.operating_point;
      md << "\nOperating point (" << op.method << "): threshold " << num(op.threshold);
      if (op.expected_cost) md << ", expected cost " << num(op.expected_cost);
      md << "\n";
    }
  } else {
    md << "No scores; curves not computed.\n";
  }

  md << "\n## Warnings\n\n";
  if (in.warnings.empty()) md << "None.\n";
  for (const Warning& w : in.warnings) md << "- " << w.code << ": " << w.message << "\n";

  md << "\n";
  if (in.scle) {
    md << scle::summary_to_markdown(*in.scle);
  } else {
    md << "## Structured case-level examination\n\nNot performed.\n";
  }

  md << "\n## Robustness\n\n";
  if (in.subsets.empty() && !in.stability && in.resampling.empty()) md << "No robustness analyses.\n";
  for (const SubsetReport& s : in.subsets) {
    md << "### Subsets by " << s.attribute << "\n\n| Category | n |";
    for (Metric m : s.metrics) md << " " << to_string(m) << " | CI |";
    md << "\n|---|---|";
    for (std::size_t i = 0; i < s.metrics.size(); ++i) md << "---|---|";
    md << "\n";
    for (const CategoryReport& c : s.categories) {
      md << "| " << c.category << " | " << c.n << " |";
      for (const MetricEstimate& e : c.estimates) {
        md << " " << num(e.value) << " | [" << num(e.ci_low) << ", " << num(e.ci_high) << "] |";
      }
      md << "\n";
    }
    md << "\nHeterogeneity (" << s.heterogeneity.test << "): statistic " << num(s.heterogeneity.statistic)
       << ", p " << num(s.heterogeneity.p_value) << (s.heterogeneity.flagged ? ", flagged" : "") << "\n\n";
  }
  if (in.stability) {
    md << "Stability over " << in.stability->n_runs << " runs: unanimity " << num(in.stability->unanimity_rate)
       << ", pairwise agreement " << num(in.stability->pairwise_agreement) << "\n\n";
  }
  for (const ResamplingSummary& r : in.resampling) {
    md << "Resampling of " << r.metric << " (" << to_string(r.scheme) << ", " << r.resamples
       << "): mean " << num(r.mean) << ", sd " << num(r.standard_deviation) << ", interval [" << num(r.ci_low)
       << ", " << num(r.ci_high) << "]; evaluation-set resampling only\n\n";
  }

  md << "\n## Human-AI interaction\n\n";
  if (in.concordance) {
    md << "Decision concordance " << num(in.concordance->concordance) << ", override rate "
       << num(in.concordance->override_rate) << " over " << in.concordance->n << " decisions.\n";
  } else {
    md << "No human decisions supplied.\n";
  }

  md << "\n## Checklist\n\n" << checklist_to_markdown(checklist);
  out.markdown = md.str();
  return out;
}

}  // namespace rareval::report
