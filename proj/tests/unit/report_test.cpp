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

#include <fstream>
#include <set>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "rareval/common.hpp"
#include "rareval/curves.hpp"
#include "rareval/report.hpp"
#include "rareval/synth.hpp"

namespace rareval::report {
namespace {

using nlohmann::json;

json read_golden(const std::string& name) {
  std::ifstream in(std::string(RAREVAL_TEST_DATA_DIR) + "/golden/" + name);
  return json::parse(in);
}

struct RunShape {
  bool enrich = true;
  bool subsets = true;
  bool stability = false;
  bool resampling = false;
  bool scle = true;
  bool rate_all_tps = true;
  std::string operating = "cost";  // "threshold", "k" or "cost"
  std::optional<double> prevalence = 0.01;
  bool benchmark = false;
  double label_noise = 0.0;
};

// Library-level equivalent of an `evaluate` run.
ReportInputs run(const RunShape& shape, std::uint64_t seed) {
  synth::PopulationSpec spec;
  spec.n = 4000;
  spec.prevalence = 0.05;
  spec.seed = seed;
  spec.score_decimals = 3;
  spec.label_noise = shape.label_noise;
  spec.subgroups = {{"site", {"north", "south", "east"}}};
  if (shape.enrich) spec.enrichment = {{synth::Selector::kNegative, 0.2}};
  if (shape.stability) {
    spec.n_runs = 3;
    spec.flip_probability = 0.05;
  }
  if (shape.benchmark) spec.benchmark_flip_probability = 0.1;
  const Dataset ds = synth::generate(spec).dataset;

  ReportInputs in;
  in.run = {"evaluate", seed, hex64(seed), std::nullopt};
  in.dataset = describe(ds);
  in.assumed_prevalence = shape.prevalence;
  const Curve curve = threshold_sweep(ds);
  in.curve = curve;
  in.auc = auc(curve);
  OperatingPoint op;
  op.method = shape.operating;
  if (shape.operating == "k") {
    op.k = 50;
    in.precision_at_k = precision_at_k(ds, 50);
    op.threshold = in.precision_at_k->cutoff_score;
  } else if (shape.operating == "cost" && shape.prevalence) {
    op.costs = CostSpec{1.0, 20.0};
    const CurvePoint best = select_operating_point(curve, *op.costs, *shape.prevalence);
    op.threshold = best.threshold;
    op.expected_cost = expected_cost(best, *op.costs, *shape.prevalence);
  } else {
    op.method = "threshold";
    op.threshold = 0.5;
  }
  in.operating_point = op;
  const Dataset applied = apply_threshold(ds, op.threshold);
  const ConfusionCounts counts = confusion(applied);
  in.counts = counts;
  const IntervalOptions intervals{0.95, 200, seed};
  for (Metric m : {Metric::kRecall, Metric::kPrecision, Metric::kSpecificity, Metric::kNpv}) {
    in.metrics.push_back(estimate(m, counts, intervals));
  }
  if (shape.benchmark) {
    std::vector<EvaluationCase> cases(applied.cases().begin(), applied.cases().end());
    for (auto& c : cases) c.predicted = c.benchmark_predicted;
    const ConfusionCounts bc = confusion(Dataset(cases, {applied.design().begin(), applied.design().end()}));
    for (Metric m : {Metric::kRecall, Metric::kPrecision}) in.benchmark_metrics.push_back(estimate(m, bc, intervals));
  }
  const auto r = metric_value(Metric::kRecall, counts);
  const auto s = metric_value(Metric::kSpecificity, counts);
  if (shape.prevalence && r && s) {
    in.projection = PrevalenceProjection{*r, *s, *shape.prevalence, bayes_adjusted_precision(*r, *s, *shape.prevalence)};
  }
  if (shape.prevalence) {
    WarningRequest req;
    req.auc_reported = true;
    req.test_set_prevalence = in.dataset->test_set_prevalence;
    in.warnings = rare_event_warnings(curve, *shape.prevalence, req);
  }
  if (shape.subsets) {
    SubsetOptions so;
    so.intervals = intervals;
    so.permutations = 200;
    so.seed = seed;
    in.subsets.push_back(subset_metrics(applied, "site", {Metric::kRecall, Metric::kPrecision}, so));
  }
  if (shape.stability) in.stability = stability(applied);
  if (shape.resampling) {
    in.resampling.push_back(resampling_variability(applied, Metric::kRecall, ResamplingScheme::kBootstrap, 50, seed));
  }
  if (shape.scle) {
    scle::ScleConfig sc;
    sc.n_fp = 6;
    sc.n_fn = 6;
    sc.n_tp = 6;
    sc.seed = seed;
    const scle::ScleSample sample = scle::draw_sample(applied, sc);
    std::vector<scle::ScleAnnotation> annotations;
    std::size_t i = 0;
    for (const auto& row : sample.rows) {
      scle::ScleAnnotation a;
      a.case_id = row.case_id;
      if (row.cell == scle::Cell::kTP && (shape.rate_all_tps || i % 2 == 0)) {
        a.triviality = i % 3 == 0 ? scle::Triviality::kTrivial : scle::Triviality::kNonTrivial;
      }
      if (row.cell == scle::Cell::kFN && i % 4 == 0) a.tags.insert(scle::Tag::kNeverEvent);
      if (row.cell == scle::Cell::kFP && i % 3 == 0) a.tags.insert(scle::Tag::kTestSetIssue);
      ++i;
      if (a.triviality || !a.tags.empty()) annotations.push_back(a);
    }
    in.scle = scle::aggregate(annotations, sample, {0.95, 200, seed});
  }
  return in;
}

std::vector<std::string> schema_errors(const RenderedReport& r) { return validate_json(report_schema(), r.json); }

TEST(Checklist, EmptyEvaluation) {
  const auto items = prefill_checklist(ReportInputs{});
  ASSERT_EQ(items.size(), kConsiderationCount);
  for (const auto& item : items) {
    EXPECT_TRUE(item.status == Status::kUnsatisfied || item.status == Status::kExternalEvidenceRequired)
        << to_string(item.consideration);
    EXPECT_FALSE(item.rationale.empty());
  }
}

TEST(Checklist, EveryConsiderationExactlyOnce) {
  const auto items = prefill_checklist(run({}, 1));
  std::set<Consideration> seen;
  for (const auto& item : items) {
    EXPECT_TRUE(seen.insert(item.consideration).second);
    EXPECT_EQ(item.key_questions, key_questions(item.consideration));
    if (item.status != Status::kSatisfied) EXPECT_FALSE(item.rationale.empty());
  }
  EXPECT_EQ(seen.size(), 12u);
}

TEST(Checklist, FullRunMatchesHandBuiltExpectations) {
  const json golden = read_golden("checklist_full_run.json");
  const auto items = prefill_checklist(run({}, 7));
  ASSERT_EQ(items.size(), golden.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    const json& g = golden[i];
    EXPECT_EQ(to_string(items[i].consideration), g["consideration"].get<std::string>());
    EXPECT_EQ(to_string(items[i].status), g["status"].get<std::string>()) << g["consideration"];
    ASSERT_EQ(items[i].evidence.size(), g["evidence"].size()) << g["consideration"];
    for (std::size_t e = 0; e < g["evidence"].size(); ++e) {
      const std::string prefix = g["evidence"][e];
      EXPECT_EQ(items[i].evidence[e].rfind(prefix, 0), 0u) << items[i].evidence[e] << " vs " << prefix;
    }
  }
}

TEST(Checklist, MissingRobustnessIsUnsatisfied) {
  RunShape shape;
  shape.subsets = false;
  const auto items = prefill_checklist(run(shape, 3));
  const auto& row = items[static_cast<std::size_t>(Consideration::kRobustness)];
  EXPECT_EQ(row.status, Status::kUnsatisfied);
  EXPECT_NE(row.rationale.find("subset breakdown"), std::string::npos);
}

TEST(Checklist, QualitativeRowsNeedAttestation) {
  ReportInputs in = run({}, 5);
  auto items = prefill_checklist(in);
  EXPECT_EQ(items[static_cast<std::size_t>(Consideration::kAnnotationProcess)].status, Status::kPartial);
  in.attestations[Consideration::kAnnotationProcess] = "double annotation with adjudication";
  items = prefill_checklist(in);
  const auto& row = items[static_cast<std::size_t>(Consideration::kAnnotationProcess)];
  EXPECT_EQ(row.status, Status::kSatisfied);
  EXPECT_EQ(row.evidence.back(), "attestation: double annotation with adjudication");
  // An attestation does not stand in for a missing analysis.
  in.subsets.clear();
  in.attestations[Consideration::kRobustness] = "monitored monthly";
  items = prefill_checklist(in);
  EXPECT_EQ(items[static_cast<std::size_t>(Consideration::kRobustness)].status, Status::kUnsatisfied);
}

TEST(Checklist, UnratedTriviaCapsAtPartial) {
  RunShape shape;
  shape.rate_all_tps = false;
  const auto items = prefill_checklist(run(shape, 2));
  EXPECT_EQ(items[static_cast<std::size_t>(Consideration::kNonTriviality)].status, Status::kPartial);
}

TEST(Checklist, CheckRejectsBrokenChecklists) {
  auto items = prefill_checklist(ReportInputs{});
  auto missing = items;
  missing.pop_back();
  EXPECT_THROW(check_checklist(missing), InvariantError);
  auto duplicated = items;
  duplicated[1] = duplicated[0];
  EXPECT_THROW(check_checklist(duplicated), InvariantError);
  auto no_rationale = items;
  no_rationale[0].rationale.clear();
  EXPECT_THROW(check_checklist(no_rationale), InvariantError);
}

TEST(Render, MinimalRunValidatesAndListsAllRows) {
  const ReportInputs in;
  const auto items = prefill_checklist(in);
  const RenderedReport r = render_report(in, items);
  EXPECT_TRUE(schema_errors(r).empty());
  for (const auto& item : items) {
    EXPECT_NE(r.markdown.find("| " + std::string(to_string(item.consideration)) + " |"), std::string::npos);
  }
}

TEST(Render, ByteIdenticalForIdenticalInputs) {
  const ReportInputs a = run({}, 9), b = run({}, 9);
  const RenderedReport ra = render_report(a, prefill_checklist(a)), rb = render_report(b, prefill_checklist(b));
  EXPECT_EQ(ra.json, rb.json);
  EXPECT_EQ(ra.markdown, rb.markdown);
}

TEST(Render, MarkdownNumbersAppearInJson) {
  const ReportInputs in = run({}, 4);
  const RenderedReport r = render_report(in, prefill_checklist(in));
  const json doc = json::parse(r.json);
  for (const json& m : doc["metrics"]) {
    const std::string v = m["value"].dump();
    EXPECT_NE(r.markdown.find(v), std::string::npos) << v;
  }
}

TEST(Render, RandomizedRunsValidate) {
  // 50 randomized synthetic runs across the optional analyses.
  std::mt19937_64 rng(2718);
  const char* operating[] = {"threshold", "k", "cost"};
  for (std::uint64_t i = 0; i < 50; ++i) {
    RunShape shape;
    shape.enrich = rng() % 2 == 0;
    shape.subsets = rng() % 2 == 0;
    shape.stability = rng() % 2 == 0;
    shape.resampling = rng() % 2 == 0;
    shape.scle = rng() % 2 == 0;
    shape.rate_all_tps = rng() % 2 == 0;
    shape.benchmark = rng() % 2 == 0;
    shape.operating = operating[rng() % 3];
    shape.label_noise = rng() % 3 == 0 ? 0.02 : 0.0;
    if (rng() % 4 == 0) shape.prevalence.reset();
    ReportInputs in = run(shape, 100 + i);
    if (rng() % 3 == 0) in.run.generated_at = "2026-01-01T00:00:00Z";
    const RenderedReport r = render_report(in, prefill_checklist(in));
    const auto errors = schema_errors(r);
    EXPECT_TRUE(errors.empty()) << "run " << i << ": " << (errors.empty() ? "" : errors.front());
  }
}

TEST(Schema, ValidatorCatchesViolations) {
  const ReportInputs in = run({}, 6);
  json doc = json::parse(render_report(in, prefill_checklist(in)).json);
  json no_checklist = doc;
  no_checklist.erase("checklist");
  EXPECT_FALSE(validate_json(report_schema(), no_checklist.dump()).empty());
  json bad_status = doc;
  bad_status["checklist"][0]["status"] = "fine";
  EXPECT_FALSE(validate_json(report_schema(), bad_status.dump()).empty());
  json short_list = doc;
  short_list["checklist"].erase(0);
  EXPECT_FALSE(validate_json(report_schema(), short_list.dump()).empty());
  json extra = doc;
  extra["surprise"] = 1;
  EXPECT_FALSE(validate_json(report_schema(), extra.dump()).empty());
  json bad_seed = doc;
  bad_seed["run"]["seed"] = "seven";
  EXPECT_FALSE(validate_json(report_schema(), bad_seed.dump()).empty());
}

TEST(Schema, EveryRandomizedSectionCarriesSeed) {
  const ReportInputs in = run({.stability = true, .resampling = true}, 8);
  const json doc = json::parse(render_report(in, prefill_checklist(in)).json);
  for (const json& m : doc["metrics"]) EXPECT_EQ(m["seed"], 8);
  EXPECT_TRUE(doc["run"].contains("config_hash"));
}

}  // namespace
}  // namespace rareval::report
