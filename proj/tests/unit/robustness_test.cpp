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

#include <algorithm>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "rareval/common.hpp"
#include "rareval/robustness.hpp"
#include "test_support.hpp"

namespace rareval {
namespace {

using testing::cases_from_counts;
using testing::labeled;

// Cases with the given recall counts tagged with a subgroup category.
void add_group(std::vector<EvaluationCase>& cases, const std::string& format, int tp, int fn, int fp, int tn) {
  auto group = cases_from_counts(tp, fp, fn, tn);
  for (auto& c : group) {
    c.case_id = format + "-" + c.case_id;
    c.subgroups["format"] = format;
    cases.push_back(c);
  }
}

TEST(Subsets, ReproducesOverallAndSubsetRecall) {
  std::vector<EvaluationCase> cases;
  add_group(cases, "e2b", 91, 9, 10, 200);
  add_group(cases, "other", 59, 41, 12, 300);
  const Dataset ds(cases);
  const SubsetReport r = subset_metrics(ds, "format", {Metric::kRecall});
  ASSERT_EQ(r.categories.size(), 2u);
  EXPECT_EQ(*metric_value(Metric::kRecall, confusion(ds)), 0.75);
  EXPECT_EQ(r.categories[0].category, "e2b");
  EXPECT_EQ(*r.categories[0].estimates[0].value, 0.91);
  EXPECT_EQ(r.total_n, ds.size());
}

TEST(Subsets, SingleCategoryEqualsGlobal) {
  std::vector<EvaluationCase> cases;
  add_group(cases, "only", 20, 5, 7, 70);
  const Dataset ds(cases);
  const SubsetReport r = subset_metrics(ds, "format", {Metric::kRecall, Metric::kPrecision});
  ASSERT_EQ(r.categories.size(), 1u);
  const ConfusionCounts all = confusion(ds);
  EXPECT_EQ(*r.categories[0].estimates[0].value, *metric_value(Metric::kRecall, all));
  EXPECT_EQ(*r.categories[0].estimates[1].value, *metric_value(Metric::kPrecision, all));
}

TEST(Subsets, CategoriesPartitionAndRecombine) {
  std::mt19937_64 rng(4);
  std::vector<EvaluationCase> cases;
  for (int i = 0; i < 600; ++i) {
    auto c = labeled("c" + std::to_string(i), rng() % 4 == 0, rng() % 3 == 0);
    if (rng() % 10 != 0) c.subgroups["site"] = std::string(1, static_cast<char>('a' + rng() % 4));
    c.stratum_id = rng() % 2 == 0 ? "s1" : "s2";
    cases.push_back(c);
  }
  const Dataset ds(cases, {{"s1", 0.3, ""}, {"s2", 1.0, ""}});
  const SubsetReport r = subset_metrics(ds, "site", {Metric::kRecall});
  std::size_t n = 0;
  ConfusionCounts sum;
  for (const auto& cat : r.categories) {
    n += cat.n;
    sum.tp += cat.counts.tp;
    sum.fp += cat.counts.fp;
    sum.fn += cat.counts.fn;
    sum.tn += cat.counts.tn;
  }
  const ConfusionCounts pooled = confusion(ds);
  EXPECT_EQ(n, 600u);
  EXPECT_NEAR(sum.tp, pooled.tp, 1e-9);
  EXPECT_NEAR(sum.fp, pooled.fp, 1e-9);
  EXPECT_NEAR(sum.fn, pooled.fn, 1e-9);
  EXPECT_NEAR(sum.tn, pooled.tn, 1e-9);
  EXPECT_TRUE(std::any_of(r.categories.begin(), r.categories.end(), [](const auto& c) { return c.category == "unknown"; }));
}

TEST(Subsets, HeterogeneityCalibratedUnderIndependence) {
  int flagged = 0;
  for (int rep = 0; rep < 100; ++rep) {
    Engine e = make_engine(derive_seed(11, "heterogeneity"), rep);
    std::vector<EvaluationCase> cases;
    for (int i = 0; i < 1000; ++i) {
      const bool positive = uniform01(e) < 0.3;
      const bool error = uniform01(e) < 0.1;
      auto c = labeled("c" + std::to_string(i), positive, error ? !positive : positive);
      c.subgroups["site"] = std::to_string(uniform_index(e, 4));
      cases.push_back(c);
    }
    SubsetOptions options;
    options.permutations = 500;
    options.seed = static_cast<std::uint64_t>(rep);
    const SubsetReport r = subset_metrics(Dataset(cases), "site", {Metric::kRecall}, options);
    EXPECT_EQ(r.heterogeneity.test, "chi_squared");
    flagged += r.heterogeneity.flagged;
  }
  EXPECT_LE(flagged, 10);
}

TEST(Subsets, SmallCellsUsePermutationTest) {
  std::vector<EvaluationCase> cases;
  add_group(cases, "a", 3, 1, 1, 5);
  add_group(cases, "b", 2, 0, 0, 4);
  SubsetOptions options;
  options.permutations = 300;
  const SubsetReport r = subset_metrics(Dataset(cases), "format", {Metric::kRecall}, options);
  EXPECT_EQ(r.heterogeneity.test, "monte_carlo_permutation");
  ASSERT_TRUE(r.heterogeneity.p_value);
  EXPECT_GT(*r.heterogeneity.p_value, 0.0);
  EXPECT_LE(*r.heterogeneity.p_value, 1.0);
}

TEST(Subsets, ClusteredErrorsAreFlagged) {
  std::vector<EvaluationCase> cases;
  add_group(cases, "clean", 100, 2, 2, 300);
  add_group(cases, "noisy", 60, 40, 40, 260);
  EXPECT_TRUE(subset_metrics(Dataset(cases), "format", {Metric::kRecall}).heterogeneity.flagged);
}

Dataset with_runs(const std::vector<std::vector<bool>>& runs) {
  std::vector<EvaluationCase> cases;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    auto c = labeled("c" + std::to_string(i), true, runs[i][0]);
    c.repeated_labels = runs[i];
    cases.push_back(c);
  }
  return Dataset(cases);
}

TEST(Stability, DeterministicRunsAreUnanimous) {
  std::vector<std::vector<bool>> runs(10, {true, true, true});
  for (std::size_t i = 0; i < 5; ++i) runs[i] = {false, false, false};
  const StabilityReport r = stability(with_runs(runs));
  EXPECT_DOUBLE_EQ(r.unanimity_rate, 1.0);
  EXPECT_DOUBLE_EQ(r.pairwise_agreement, 1.0);
}

TEST(Stability, OneFlipInThreeRuns) {
  std::vector<std::vector<bool>> runs(10, {true, true, true});
  runs[4] = {true, false, true};
  const StabilityReport r = stability(with_runs(runs));
  EXPECT_DOUBLE_EQ(r.unanimity_rate, 0.9);
  EXPECT_NEAR(r.pairwise_agreement, 0.9 + 0.1 / 3.0, 1e-12);
  EXPECT_LE(r.unanimity_rate, r.pairwise_agreement);
}

TEST(Stability, CoinFlipsGiveHalfUnanimity) {
  Engine e = make_engine(2024);
  std::vector<std::vector<bool>> runs(10000);
  for (auto& r : runs) r = {uniform01(e) < 0.5, uniform01(e) < 0.5};
  const StabilityReport r = stability(with_runs(runs));
  EXPECT_NEAR(r.unanimity_rate, 0.5, 2 * std::sqrt(0.25 / 10000));
}

TEST(Stability, InvariantToRunOrder) {
  std::mt19937_64 rng(6);
  std::vector<std::vector<bool>> runs(200), reordered(200);
  for (std::size_t i = 0; i < runs.size(); ++i) {
    for (int k = 0; k < 4; ++k) runs[i].push_back(rng() % 3 == 0);
    reordered[i] = {runs[i][2], runs[i][0], runs[i][3], runs[i][1]};
  }
  const StabilityReport a = stability(with_runs(runs)), b = stability(with_runs(reordered));
  EXPECT_DOUBLE_EQ(a.unanimity_rate, b.unanimity_rate);
  EXPECT_DOUBLE_EQ(a.pairwise_agreement, b.pairwise_agreement);
}

TEST(Stability, RequiresRepeatedLabelsEverywhere) {
  auto cases = cases_from_counts(1, 1, 0, 0);
  cases[0].repeated_labels = {true, true};
  EXPECT_THROW(stability(Dataset(cases)), InputError);
}

TEST(Resampling, BootstrapRecallCentredOnPointEstimate) {
  const Dataset ds(cases_from_counts(75, 10, 25, 90));
  const ResamplingSummary s = resampling_variability(ds, Metric::kRecall, ResamplingScheme::kBootstrap, 2000, 3);
  ASSERT_TRUE(s.mean);
  EXPECT_DOUBLE_EQ(*s.point_estimate, 0.75);
  EXPECT_NEAR(*s.mean, 0.75, 2 * *s.standard_deviation / std::sqrt(2000.0));
  EXPECT_LE(*s.ci_low, 0.75);
  EXPECT_GE(*s.ci_high, 0.75);
}

TEST(Resampling, PerfectClassifierHasNoSpread) {
  const Dataset ds(cases_from_counts(30, 0, 0, 70));
  for (auto scheme : {ResamplingScheme::kBootstrap, ResamplingScheme::kKFold}) {
    const ResamplingSummary s = resampling_variability(ds, Metric::kRecall, scheme, 5, 1);
    EXPECT_DOUBLE_EQ(*s.standard_deviation, 0.0);
  }
}

TEST(Resampling, SeedDeterministic) {
  const Dataset ds(cases_from_counts(40, 15, 12, 80));
  const auto a = resampling_variability(ds, Metric::kPrecision, ResamplingScheme::kKFold, 10, 9);
  const auto b = resampling_variability(ds, Metric::kPrecision, ResamplingScheme::kKFold, 10, 9);
  EXPECT_EQ(to_json(a), to_json(b));
}

TEST(Resampling, PercentileIntervalContainsPointEstimate) {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 30; ++i) {
    const Dataset ds(cases_from_counts(1 + rng() % 30, rng() % 30, rng() % 30, 1 + rng() % 60));
    for (Metric m : {Metric::kRecall, Metric::kSpecificity}) {
      const auto s = resampling_variability(ds, m, ResamplingScheme::kBootstrap, 300, static_cast<std::uint64_t>(i));
      if (!s.point_estimate) continue;
      EXPECT_LE(*s.ci_low, *s.point_estimate);
      EXPECT_GE(*s.ci_high, *s.point_estimate);
    }
  }
}

}  // namespace
}  // namespace rareval
