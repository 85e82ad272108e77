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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "cli/cli.hpp"
#include "rareval/report.hpp"

namespace rareval::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result rareval(std::vector<std::string> args) {
  std::ostringstream out, err;
  Result r;
  r.code = run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("rareval_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const std::string kSmall = std::string(RAREVAL_TEST_DATA_DIR) + "/data/small.csv";

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = slurp(e.path());
  }
  return files;
}

// ---- --help golden files ------------------------------------------------

class HelpGolden : public ::testing::TestWithParam<std::vector<std::string>> {};

TEST_P(HelpGolden, MatchesGoldenFile) {
  std::vector<std::string> args = GetParam();
  std::string name = "rareval";
  for (const auto& a : args) name += "_" + a;
  args.push_back("--help");
  const Result r = rareval(args);
  ASSERT_EQ(r.code, 0);
  const fs::path golden = fs::path(RAREVAL_TEST_DATA_DIR) / "golden" / "help" / (name + ".txt");
  if (std::getenv("RAREVAL_UPDATE_GOLDEN")) {
    std::ofstream(golden, std::ios::binary) << r.out;
    GTEST_SKIP() << "golden file rewritten";
  }
  ASSERT_TRUE(fs::exists(golden)) << golden;
  EXPECT_EQ(r.out, slurp(golden));
}

INSTANTIATE_TEST_SUITE_P(
    AllCommands, HelpGolden,
    ::testing::Values(std::vector<std::string>{}, std::vector<std::string>{"evaluate"},
                      std::vector<std::string>{"adjust-precision"}, std::vector<std::string>{"size-study"},
                      std::vector<std::string>{"pair-prevalence"}, std::vector<std::string>{"scle"},
                      std::vector<std::string>{"scle", "sample"}, std::vector<std::string>{"scle", "ingest"},
                      std::vector<std::string>{"scle", "aggregate"}, std::vector<std::string>{"scle", "apply-verdicts"},
                      std::vector<std::string>{"subsets"}, std::vector<std::string>{"stability"},
                      std::vector<std::string>{"resample"}, std::vector<std::string>{"synth"},
                      std::vector<std::string>{"checklist"}),
    [](const auto& info) {
      std::string n = "root";
      for (const auto& a : info.param) n += "_" + a;
      for (char& c : n) c = c == '-' ? '_' : c;
      return n;
    });

TEST(Help, EveryCommandListsSeedAndReproducible) {
  for (const char* cmd : {"evaluate", "adjust-precision", "size-study", "pair-prevalence", "subsets", "stability",
                          "resample", "synth", "checklist"}) {
    const Result r = rareval({cmd, "--help"});
    EXPECT_NE(r.out.find("--seed"), std::string::npos) << cmd;
    EXPECT_NE(r.out.find("--reproducible"), std::string::npos) << cmd;
    EXPECT_NE(r.out.find("--config"), std::string::npos) << cmd;
    EXPECT_NE(r.out.find("--output-dir"), std::string::npos) << cmd;
  }
}

// ---- worked numbers -----------------------------------------------------

TEST(AdjustPrecision, CounterfactualSpecificity) {
  const Result r = rareval({"adjust-precision", "--sensitivity", "0.9944", "--specificity", "0.98", "--prevalence",
                            "0.000679"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NEAR(json::parse(r.out)["precision"].get<double>(), 0.033, 0.001);
}

TEST(PairPrevalence, OneInTwoHundredMillion) {
  const Result r = rareval({"pair-prevalence", "--n", "40000000", "--duplicate-fraction", "0.2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  EXPECT_EQ(j["prevalence"].get<double>(), 5e-9);
  EXPECT_NE(r.out.find("5e-09"), std::string::npos);
}

// ---- errors -------------------------------------------------------------

TEST(Errors, MachineReadableWithExitCodes) {
  Result r = rareval({"evaluate", "--input", "/nonexistent.csv", "--output-dir", "/tmp/x"});
  EXPECT_EQ(r.code, 2);
  json e = json::parse(r.err)["error"];
  EXPECT_EQ(e["kind"], "input_error");
  EXPECT_EQ(e["exit_code"], 2);

  r = rareval({"size-study", "--flag-rate-a", "0.01", "--flag-rate-b", "0.01", "--overlap", "0.95", "--precision-a",
               "0.5", "--precision-b", "0.99", "--sample-size", "1000"});
  EXPECT_EQ(r.code, 3) << r.err;
  EXPECT_EQ(json::parse(r.err)["error"]["kind"], "infeasible_request");

  r = rareval({"no-such-command"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NO_THROW(json::parse(r.err));
}

TEST(Errors, OperatingPointMustBeUnique) {
  const fs::path dir = scratch("opoint");
  Result r = rareval({"evaluate", "--input", kSmall, "--output-dir", dir.string()});
  EXPECT_EQ(r.code, 2);
  r = rareval({"evaluate", "--input", kSmall, "--threshold", "0.5", "--k", "3", "--output-dir", dir.string()});
  EXPECT_EQ(r.code, 2);
  r = rareval({"evaluate", "--input", kSmall, "--cost-fp", "1", "--cost-fn", "5", "--output-dir", dir.string()});
  EXPECT_EQ(r.code, 2) << "cost selection needs a prevalence";
  r = rareval({"evaluate", "--input", kSmall, "--cost-fp", "1", "--cost-fn", "5", "--assumed-prevalence", "0.01",
               "--output-dir", dir.string()});
  EXPECT_EQ(r.code, 0) << r.err;
}

// ---- end to end ---------------------------------------------------------

TEST(Evaluate, ReproducibleRunsAreByteIdenticalAndValid) {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  for (const fs::path& dir : {a, b}) {
    const Result r = rareval({"evaluate", "--input", kSmall, "--threshold", "0.5", "--assumed-prevalence", "0.01",
                              "--subsets", "site", "--f1", "--reproducible", "--seed", "5", "--output-dir",
                              dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  const auto ta = tree(a), tb = tree(b);
  EXPECT_EQ(ta, tb);
  ASSERT_TRUE(ta.contains("report.json"));
  EXPECT_TRUE(report::validate_json(report::report_schema(), ta.at("report.json")).empty());
  const json report = json::parse(ta.at("report.json"));
  EXPECT_FALSE(report["run"].contains("generated_at"));
  EXPECT_EQ(report["run"]["seed"], 5);
  EXPECT_EQ(report["checklist"].size(), 12u);
}

TEST(Evaluate, TimestampOnlyWithoutReproducible) {
  const fs::path dir = scratch("timestamp");
  ASSERT_EQ(rareval({"evaluate", "--input", kSmall, "--threshold", "0.5", "--output-dir", dir.string()}).code, 0);
  EXPECT_TRUE(json::parse(slurp(dir / "report.json"))["run"].contains("generated_at"));
}

TEST(Evaluate, ConfigFileOverridesFlags) {
  const fs::path dir = scratch("config");
  std::ofstream(dir / "run.json") << R"({"threshold": 0.7, "metrics": ["recall", "precision"]})";
  const Result r = rareval({"evaluate", "--input", kSmall, "--threshold", "0.2", "--config", (dir / "run.json").string(),
                            "--reproducible", "--output-dir", (dir / "out").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const json report = json::parse(slurp(dir / "out" / "report.json"));
  EXPECT_EQ(report["curves"]["operating_point"]["threshold"], 0.7);
  EXPECT_EQ(report["metrics"].size(), 2u);
  std::ofstream(dir / "bad.json") << R"({"no_such_flag": 1})";
  EXPECT_EQ(rareval({"evaluate", "--input", kSmall, "--config", (dir / "bad.json").string(), "--output-dir",
                     (dir / "out").string()})
                .code,
            2);
}

TEST(Evaluate, OutputDirFromEnvironment) {
  const fs::path dir = scratch("env");
  ::setenv("RAREVAL_OUTPUT_DIR", dir.string().c_str(), 1);
  const Result r = rareval({"evaluate", "--input", kSmall, "--threshold", "0.5"});
  ::unsetenv("RAREVAL_OUTPUT_DIR");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "report.json"));
}

TEST(Evaluate, SeedChangesOnlySeededOutputs) {
  const fs::path dir = scratch("seeds");
  for (const char* seed : {"1", "2"}) {
    ASSERT_EQ(rareval({"synth", "--n", "3000", "--prevalence", "0.05", "--enrich", "negative:0.2", "--seed", "11",
                       "--output", (dir / "d.csv").string()})
                  .code,
              0);
    ASSERT_EQ(rareval({"evaluate", "--input", (dir / "d.csv").string(), "--threshold", "0.5", "--reproducible",
                       "--bootstrap-resamples", "300", "--seed", seed, "--output-dir", (dir / seed).string()})
                  .code,
              0);
  }
  const json a = json::parse(slurp(dir / "1" / "report.json")), b = json::parse(slurp(dir / "2" / "report.json"));
  EXPECT_EQ(a["metrics"][0]["value"], b["metrics"][0]["value"]);
  EXPECT_NE(a["metrics"][0]["ci_low"], b["metrics"][0]["ci_low"]);
}

TEST(Synth, SeedFlagOverridesSpecSeed) {
  const fs::path dir = scratch("synth");
  std::ofstream(dir / "spec.json") << R"({"n": 500, "prevalence": 0.1, "seed": 3})";
  auto gen = [&](const std::string& out, std::vector<std::string> extra) {
    std::vector<std::string> args = {"synth", "--spec", (dir / "spec.json").string(), "--output", (dir / out).string()};
    args.insert(args.end(), extra.begin(), extra.end());
    return rareval(args);
  };
  ASSERT_EQ(gen("a.csv", {}).code, 0);
  ASSERT_EQ(gen("b.csv", {"--seed", "3"}).code, 0);
  ASSERT_EQ(gen("c.csv", {"--seed", "4"}).code, 0);
  EXPECT_EQ(slurp(dir / "a.csv"), slurp(dir / "b.csv"));
  EXPECT_NE(slurp(dir / "a.csv"), slurp(dir / "c.csv"));
  EXPECT_TRUE(fs::exists(dir / "a.csv.truth.json"));
  // The truth sidecar is not a dataset.
  EXPECT_EQ(rareval({"evaluate", "--input", (dir / "a.csv.truth.json").string(), "--format", "jsonl", "--output-dir",
                     (dir / "o").string()})
                .code,
            2);
}

TEST(Scle, SampleIngestAggregateEvaluate) {
  const fs::path dir = scratch("scle");
  ASSERT_EQ(rareval({"synth", "--n", "2000", "--prevalence", "0.1", "--subgroup", "site:a|b", "--output",
                     (dir / "d.csv").string()})
                .code,
            0);
  Result r = rareval({"scle", "sample", "--input", (dir / "d.csv").string(), "--n-fp", "5", "--n-fn", "5", "--n-tp",
                      "5", "--substratify-by", "site", "--seed", "9", "--reproducible", "--output-dir",
                      (dir / "scle").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string sample = (dir / "scle" / "scle_sample.json").string();
  const std::string sheet = (dir / "scle" / "review_sheet.csv").string();
  r = rareval({"scle", "ingest", "--sample", sample, "--sheet", sheet});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["annotations"], 0);
  r = rareval({"scle", "aggregate", "--sample", sample, "--sheet", sheet});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["summary"]["state"], "no_findings");
  r = rareval({"evaluate", "--input", (dir / "d.csv").string(), "--threshold", "0.5", "--scle-sample", sample,
               "--scle-sheet", sheet, "--reproducible", "--output-dir", (dir / "eval").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(report::validate_json(report::report_schema(), slurp(dir / "eval" / "report.json")).empty());
  r = rareval({"scle", "apply-verdicts", "--sample", sample, "--sheet", sheet, "--input", (dir / "d.csv").string(),
               "--output", (dir / "revised.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["revision"], "1");
}

TEST(Robustness, CommandsPrintSeededJson) {
  const fs::path dir = scratch("robust");
  ASSERT_EQ(rareval({"synth", "--n", "1000", "--n-runs", "3", "--flip-probability", "0.05", "--subgroup", "site:a|b|c",
                     "--output", (dir / "d.jsonl").string()})
                .code,
            0);
  const std::string d = (dir / "d.jsonl").string();
  Result r = rareval({"subsets", "--input", d, "--attribute", "site", "--seed", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["seed"], 2);
  r = rareval({"stability", "--input", d});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_LT(json::parse(r.out)["unanimity_rate"].get<double>(), 1.0);
  r = rareval({"resample", "--input", d, "--scheme", "k_fold", "--n", "5", "--seed", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["seed"], 3);
}

TEST(SizeStudy, SimulateAndSolve) {
  Result r = rareval({"size-study", "--combined-flags", "448", "--combined-mode", "union", "--overlap", "0.2",
                      "--precision-a", "0.8", "--precision-b", "0.88", "--sample-size", "30000", "--replicates", "400",
                      "--seed", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json sim = json::parse(r.out);
  EXPECT_GT(sim["power"].get<double>(), 0.0);
  r = rareval({"size-study", "--flag-rate-a", "0.05", "--flag-rate-b", "0.05", "--overlap", "0.5", "--precision-a",
               "0.6", "--precision-b", "0.8", "--target-power", "0.8", "--replicates", "300"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_GE(json::parse(r.out)["power"].get<double>(), 0.8);
}

TEST(Checklist, PrintsTwelveRows) {
  const Result r = rareval({"checklist"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out).size(), 12u);
}

}  // namespace
}  // namespace rareval::cli
