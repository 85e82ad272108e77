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

#include "rareval/scle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "rareval/common.hpp"
#include "rareval/csv.hpp"
#include "sampling.hpp"

namespace rareval::scle {
namespace {

using json = nlohmann::ordered_json;
using detail::percentile;

constexpr std::string_view kCellNames[] = {"TP", "FP", "FN", "TN"};
constexpr std::string_view kBenchmarkCellNames[] = {"M+B+", "M+B-", "M-B+", "M-B-"};
constexpr Tag kAllTags[] = {Tag::kNeverEvent, Tag::kUnexpectedError, Tag::kInputDataIssue,
                            Tag::kTestSetIssue};

Cell classify(bool positive, bool flagged) {
  if (positive) return flagged ? Cell::kTP : Cell::kFN;
  return flagged ? Cell::kFP : Cell::kTN;
}

BenchmarkCell cross(bool model, bool benchmark) {
  if (model) return benchmark ? BenchmarkCell::kBothPositive : BenchmarkCell::kModelOnly;
  return benchmark ? BenchmarkCell::kBenchmarkOnly : BenchmarkCell::kBothNegative;
}

struct CellPlan {
  std::string name;
  std::size_t requested = 0;
  std::vector<std::size_t> members;  // dataset indices, in dataset order
};

// Largest-remainder apportionment of `total` over `sizes` (proportional).
// Ties in the fractional part go to the earlier entry.
std::vector<std::size_t> apportion(std::size_t total, const std::vector<std::size_t>& sizes) {
  const std::size_t population = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
  std::vector<std::size_t> alloc(sizes.size(), 0);
  if (population == 0 || total == 0) return alloc;
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    // Integer arithmetic keeps the quotas exact.
    const std::size_t scaled = total * sizes[i];
    alloc[i] = scaled / population;
    assigned += alloc[i];
    remainders.emplace_back(static_cast<double>(scaled % population), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < total; ++r, ++assigned) ++alloc[remainders[r].second];
  return alloc;
}

// Seeded systematic rounding: integer allocations summing to `total` with
// E[alloc_i] = quota_i.
std::vector<std::size_t> systematic_round(const std::vector<double>& quotas, std::size_t total,
                                          Engine& engine) {
  std::vector<std::size_t> alloc(quotas.size());
  std::vector<double> frac(quotas.size());
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < quotas.size(); ++i) {
    alloc[i] = static_cast<std::size_t>(std::floor(quotas[i]));
    frac[i] = quotas[i] - static_cast<double>(alloc[i]);
    assigned += alloc[i];
  }
  const double u = uniform01(engine);
  double cum = 0.0;
  for (std::size_t i = 0; i < quotas.size(); ++i) {
    const double next = cum + frac[i];
    const auto hits = static_cast<std::size_t>(std::ceil(next - u) - std::ceil(cum - u));
    alloc[i] += hits;
    assigned += hits;
    cum = next;
  }
  // Floating-point slack can leave the total off by one.
  while (assigned < total) {
    const auto it = std::max_element(frac.begin(), frac.end());
    ++alloc[static_cast<std::size_t>(it - frac.begin())];
    *it = -1.0;
    ++assigned;
  }
  while (assigned > total) {
    for (std::size_t i = quotas.size(); i-- > 0;) {
      if (alloc[i] > 0 && static_cast<double>(alloc[i]) > quotas[i]) {
        --alloc[i];
        --assigned;
        break;
      }
    }
  }
  return alloc;
}

std::vector<std::size_t> sample_without_replacement(std::vector<std::size_t> pool, std::size_t k,
                                                    Engine& engine) {
  k = std::min(k, pool.size());
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(uniform_index(engine, pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

std::string hash_sample(const ScleSample& sample) {
  std::string material = config_to_json(sample.config);
  for (const SampleRow& r : sample.rows) {
    material += "\n" + r.case_id + "|" + std::string(to_string(r.cell)) + "|" + r.sampling_cell +
                "|" + r.stratum;
  }
  return hex64(fnv1a64(material));
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

// Percentile bootstrap of a proportion k / n over resampled rows.
std::pair<double, double> bootstrap_proportion(std::size_t k, std::size_t n,
                                               const AggregateOptions& options,
                                               std::uint64_t stream) {
  if (n == 0) return {0.0, 0.0};
  const double p = static_cast<double>(k) / static_cast<double>(n);
  if (k == 0 || k == n || options.bootstrap_resamples <= 0) return {p, p};
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(options.bootstrap_resamples));
  for (int b = 0; b < options.bootstrap_resamples; ++b) {
    Engine engine = make_engine(stream, static_cast<std::uint64_t>(b));
    std::binomial_distribution<std::size_t> draw(n, p);
    values.push_back(static_cast<double>(draw(engine)) / static_cast<double>(n));
  }
  std::sort(values.begin(), values.end());
  const double alpha = 1.0 - options.ci_level;
  return {std::min(p, percentile(values, alpha / 2.0)),
          std::max(p, percentile(values, 1.0 - alpha / 2.0))};
}

json tag_stat_json(const TagStat& s) {
  return json{{"count", s.count},
              {"rate", s.rate},
              {"ci_low", s.ci_low},
              {"ci_high", s.ci_high},
              {"projected_count", s.projected_count},
              {"projected_low", s.projected_low},
              {"projected_high", s.projected_high}};
}

}  // namespace

std::string_view to_string(Cell cell) { return kCellNames[static_cast<int>(cell)]; }
std::string_view to_string(BenchmarkCell cell) { return kBenchmarkCellNames[static_cast<int>(cell)]; }

Cell parse_cell(std::string_view text) {
  for (int i = 0; i < 4; ++i) {
    if (text == kCellNames[i]) return static_cast<Cell>(i);
  }
  throw InputError("unknown classification cell '" + std::string(text) + "'");
}

BenchmarkCell parse_benchmark_cell(std::string_view text) {
  for (int i = 0; i < 4; ++i) {
    if (text == kBenchmarkCellNames[i]) return static_cast<BenchmarkCell>(i);
  }
  throw InputError("unknown benchmark cell '" + std::string(text) + "'");
}

std::string_view to_string(Tag tag) { return kTagColumns[static_cast<int>(tag)]; }

std::string_view to_string(Triviality t) {
  switch (t) {
    case Triviality::kTrivial:
      return "trivial";
    case Triviality::kNonTrivial:
      return "non_trivial";
    case Triviality::kUnclear:
      return "unclear";
  }
  return "unclear";
}

Triviality parse_triviality(std::string_view text) {
  const std::string v = to_lower(trim(text));
  if (v == "trivial") return Triviality::kTrivial;
  if (v == "non_trivial" || v == "non-trivial" || v == "nontrivial") return Triviality::kNonTrivial;
  if (v == "unclear") return Triviality::kUnclear;
  throw InputError("unknown triviality value '" + std::string(text) +
                   "' (expected trivial, non_trivial or unclear)");
}

std::string_view remedial_code(Tag tag) {
  switch (tag) {
    case Tag::kNeverEvent:
      return "ESCALATE";
    case Tag::kUnexpectedError:
      return "RETRAIN_OR_THRESHOLD_REVIEW";
    case Tag::kInputDataIssue:
      return "DATA_QUALITY_IMPROVEMENT";
    case Tag::kTestSetIssue:
      return "UPDATE_ANNOTATIONS_OR_GUIDELINES";
  }
  return "";
}

std::string_view remedial_action(Tag tag) {
  switch (tag) {
    case Tag::kNeverEvent:
      return "escalate";
    case Tag::kUnexpectedError:
      return "re-training/threshold review";
    case Tag::kInputDataIssue:
      return "data quality improvement";
    case Tag::kTestSetIssue:
      return "update annotations/guidelines";
  }
  return "";
}

void validate(const ScleConfig& config) {
  if (config.n_fp == 0 && config.n_fn == 0 && config.n_tp == 0) {
    throw InputError("SCLE config: at least one of n_fp, n_fn, n_tp must be positive");
  }
  if (!(config.disagreement_oversample_factor >= 1.0) ||
      !std::isfinite(config.disagreement_oversample_factor)) {
    throw InputError("SCLE config: disagreement_oversample_factor must be >= 1");
  }
  if (config.boundary_bins) {
    if (*config.boundary_bins == 0) throw InputError("SCLE config: boundary_bins must be positive");
    if (!config.threshold) {
      throw InputError("SCLE config: boundary_bins needs the decision threshold");
    }
  }
}

std::string config_to_json(const ScleConfig& c) {
  json j;
  j["n_fp"] = c.n_fp;
  j["n_fn"] = c.n_fn;
  j["n_tp"] = c.n_tp;
  j["n_tn"] = c.n_tn;
  j["substratify_by"] = c.substratify_by;
  j["boundary_bins"] = c.boundary_bins ? json(*c.boundary_bins) : json(nullptr);
  j["threshold"] = c.threshold ? json(*c.threshold) : json(nullptr);
  j["benchmark_mode"] = c.benchmark_mode;
  j["disagreement_oversample_factor"] = c.disagreement_oversample_factor;
  j["seed"] = c.seed;
  return j.dump();
}

ScleConfig config_from_json(std::string_view text) {
  ScleConfig c;
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    c.n_fp = j.value("n_fp", c.n_fp);
    c.n_fn = j.value("n_fn", c.n_fn);
    c.n_tp = j.value("n_tp", c.n_tp);
    c.n_tn = j.value("n_tn", c.n_tn);
    if (j.contains("substratify_by")) c.substratify_by = j["substratify_by"].get<std::vector<std::string>>();
    if (j.contains("boundary_bins") && !j["boundary_bins"].is_null()) {
      c.boundary_bins = j["boundary_bins"].get<std::size_t>();
    }
    if (j.contains("threshold") && !j["threshold"].is_null()) c.threshold = j["threshold"].get<double>();
    c.benchmark_mode = j.value("benchmark_mode", c.benchmark_mode);
    c.disagreement_oversample_factor =
        j.value("disagreement_oversample_factor", c.disagreement_oversample_factor);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("SCLE config: ") + e.what());
  }
  validate(c);
  return c;
}

const SampleRow* ScleSample::find(std::string_view case_id) const {
  for (const SampleRow& r : rows) {
    if (r.case_id == case_id) return &r;
  }
  return nullptr;
}

ScleSample draw_sample(const Dataset& dataset, const ScleConfig& config) {
  validate(config);
  const auto cases = dataset.cases();

  std::vector<Cell> cell_of(cases.size(), Cell::kTN);
  std::vector<std::optional<BenchmarkCell>> bench_of(cases.size());
  std::vector<bool> eligible(cases.size(), false);
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const EvaluationCase& c = cases[i];
    if (!is_evaluable(c.reference)) continue;
    if (!c.predicted) throw InputError("SCLE: case_id '" + c.case_id + "' has no predicted label");
    eligible[i] = true;
    cell_of[i] = classify(c.reference == ReferenceLabel::kPositive, *c.predicted);
    if (c.benchmark_predicted) bench_of[i] = cross(*c.predicted, *c.benchmark_predicted);
    if (config.benchmark_mode && !c.benchmark_predicted) {
      throw InputError("SCLE: benchmark_mode needs benchmark labels; case_id '" + c.case_id +
                       "' has none");
    }
    if (config.boundary_bins && !c.score) {
      throw InputError("SCLE: boundary_bins needs scored cases; case_id '" + c.case_id +
                       "' has no score");
    }
  }

  std::vector<CellPlan> plans;
  if (config.benchmark_mode) {
    const std::size_t budget = config.n_fp + config.n_fn + config.n_tp + config.n_tn;
    std::vector<double> weights;
    for (int b = 0; b < 4; ++b) {
      const auto cell = static_cast<BenchmarkCell>(b);
      weights.push_back(is_disagreement(cell) ? config.disagreement_oversample_factor : 1.0);
    }
    const double total_weight = std::accumulate(weights.begin(), weights.end(), 0.0);
    std::vector<double> quotas;
    for (double w : weights) quotas.push_back(static_cast<double>(budget) * w / total_weight);
    Engine engine = make_engine(derive_seed(config.seed, "scle.allocation"));
    const std::vector<std::size_t> alloc = systematic_round(quotas, budget, engine);
    for (int b = 0; b < 4; ++b) {
      CellPlan plan{std::string(kBenchmarkCellNames[b]), alloc[static_cast<std::size_t>(b)], {}};
      for (std::size_t i = 0; i < cases.size(); ++i) {
        if (eligible[i] && bench_of[i] == static_cast<BenchmarkCell>(b)) plan.members.push_back(i);
      }
      plans.push_back(std::move(plan));
    }
  } else {
    const std::pair<Cell, std::size_t> requests[] = {
        {Cell::kFP, config.n_fp}, {Cell::kFN, config.n_fn}, {Cell::kTP, config.n_tp}, {Cell::kTN, config.n_tn}};
    for (const auto& [cell, requested] : requests) {
      if (requested == 0) continue;
      CellPlan plan{std::string(to_string(cell)), requested, {}};
      for (std::size_t i = 0; i < cases.size(); ++i) {
        if (eligible[i] && cell_of[i] == cell) plan.members.push_back(i);
      }
      plans.push_back(std::move(plan));
    }
  }

  for (const std::string& attr : config.substratify_by) {
    const bool present = std::any_of(cases.begin(), cases.end(), [&](const EvaluationCase& c) {
      return c.subgroups.contains(attr);
    });
    if (!present) throw InputError("SCLE: substratify_by attribute '" + attr + "' is absent from every case");
  }
  const bool substratified = !config.substratify_by.empty() || config.boundary_bins.has_value();

  ScleSample sample;
  sample.config = config;
  const std::uint64_t stream = derive_seed(config.seed, "scle.sample");
  for (std::size_t p = 0; p < plans.size(); ++p) {
    const CellPlan& plan = plans[p];
    Engine engine = make_engine(stream, p);
    CellAllocation allocation{plan.name, plan.members.size(), plan.requested, 0, {}};
    const std::size_t target = std::min(plan.requested, plan.members.size());
    if (plan.requested > plan.members.size()) {
      sample.warnings.push_back("cell " + plan.name + ": sampled " + std::to_string(target) + " of " +
                                std::to_string(plan.requested) + " requested (population " +
                                std::to_string(plan.members.size()) + ")");
    }

    std::vector<std::string> label(cases.size());
    std::vector<std::string> stratum_names;
    std::map<std::string, std::vector<std::size_t>> strata;
    if (substratified) {
      std::vector<std::size_t> bin_of(cases.size(), 0);
      const std::size_t bins = config.boundary_bins.value_or(0);
      if (bins > 0) {
        std::vector<std::size_t> by_distance = plan.members;
        std::stable_sort(by_distance.begin(), by_distance.end(), [&](std::size_t a, std::size_t b) {
          return std::abs(*cases[a].score - *config.threshold) < std::abs(*cases[b].score - *config.threshold);
        });
        for (std::size_t rank = 0; rank < by_distance.size(); ++rank) {
          bin_of[by_distance[rank]] = rank * bins / by_distance.size() + 1;
        }
      }
      for (std::size_t i : plan.members) {
        std::string l;
        for (const std::string& attr : config.substratify_by) {
          auto it = cases[i].subgroups.find(attr);
          if (!l.empty()) l += ";";
          l += attr + "=" + (it == cases[i].subgroups.end() ? std::string("unknown") : it->second);
        }
        if (bins > 0) {
          if (!l.empty()) l += ";";
          l += "boundary_bin=" + std::to_string(bin_of[i]) + "/" + std::to_string(bins);
        }
        label[i] = l;
        strata[l].push_back(i);
      }
      std::vector<std::size_t> sizes;
      for (const auto& [name, members] : strata) {
        stratum_names.push_back(name);
        sizes.push_back(members.size());
      }
      std::vector<std::size_t> alloc = apportion(target, sizes);

      if (bins > 0 && target > 0) {
        const std::string top_suffix = "boundary_bin=" + std::to_string(bins) + "/" + std::to_string(bins);
        auto is_top = [&](const std::string& name) {
          return name.size() >= top_suffix.size() &&
                 name.compare(name.size() - top_suffix.size(), top_suffix.size(), top_suffix) == 0;
        };
        std::size_t top_alloc = 0, top_pop = 0;
        for (std::size_t s = 0; s < stratum_names.size(); ++s) {
          if (is_top(stratum_names[s])) {
            top_alloc += alloc[s];
            top_pop += sizes[s];
          }
        }
        if (top_alloc == 0 && top_pop > 0) {
          std::size_t donor = 0, recipient = stratum_names.size();
          for (std::size_t s = 0; s < stratum_names.size(); ++s) {
            if (alloc[s] > alloc[donor]) donor = s;
            if (is_top(stratum_names[s]) &&
                (recipient == stratum_names.size() || sizes[s] > sizes[recipient])) {
              recipient = s;
            }
          }
          --alloc[donor];
          ++alloc[recipient];
        }
      }

      std::vector<std::size_t> chosen;
      for (std::size_t s = 0; s < stratum_names.size(); ++s) {
        auto picked = sample_without_replacement(strata[stratum_names[s]], alloc[s], engine);
        allocation.per_stratum[stratum_names[s]] = picked.size();
        chosen.insert(chosen.end(), picked.begin(), picked.end());
      }
      std::sort(chosen.begin(), chosen.end());
      allocation.sampled = chosen.size();
      for (std::size_t i : chosen) {
        sample.rows.push_back({cases[i].case_id, cell_of[i], bench_of[i], plan.name, label[i], 0.0});
      }
    } else {
      const auto chosen = sample_without_replacement(plan.members, target, engine);
      allocation.sampled = chosen.size();
      for (std::size_t i : chosen) {
        sample.rows.push_back({cases[i].case_id, cell_of[i], bench_of[i], plan.name, "", 0.0});
      }
    }
    for (SampleRow& r : sample.rows) {
      if (r.sampling_cell == plan.name && allocation.sampled > 0) {
        r.sampling_weight = static_cast<double>(allocation.population) /
                            static_cast<double>(allocation.sampled);
      }
    }
    sample.cells.push_back(std::move(allocation));
  }
  sample.config_hash = hash_sample(sample);
  return sample;
}

std::string sample_to_json(const ScleSample& sample) {
  json j;
  j["kind"] = "scle_sample";
  j["config"] = json::parse(config_to_json(sample.config));
  j["config_hash"] = sample.config_hash;
  j["cells"] = json::array();
  for (const CellAllocation& c : sample.cells) {
    j["cells"].push_back({{"cell", c.cell},
                          {"population", c.population},
                          {"requested", c.requested},
                          {"sampled", c.sampled},
                          {"per_stratum", c.per_stratum}});
  }
  j["warnings"] = sample.warnings;
  j["rows"] = json::array();
  for (const SampleRow& r : sample.rows) {
    j["rows"].push_back({{"case_id", r.case_id},
                         {"cell", to_string(r.cell)},
                         {"benchmark_cell", r.benchmark_cell ? json(to_string(*r.benchmark_cell)) : json(nullptr)},
                         {"sampling_cell", r.sampling_cell},
                         {"stratum", r.stratum},
                         {"sampling_weight", r.sampling_weight}});
  }
  return j.dump(2);
}

ScleSample sample_from_json(std::string_view text) {
  ScleSample s;
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    if (j.value("kind", std::string{}) != "scle_sample") throw InputError("not an SCLE sample file");
    s.config = config_from_json(j.at("config").dump());
    s.config_hash = j.at("config_hash").get<std::string>();
    for (const auto& c : j.at("cells")) {
      s.cells.push_back({c.at("cell").get<std::string>(), c.at("population").get<std::size_t>(),
                         c.at("requested").get<std::size_t>(), c.at("sampled").get<std::size_t>(),
                         c.at("per_stratum").get<std::map<std::string, std::size_t>>()});
    }
    s.warnings = j.at("warnings").get<std::vector<std::string>>();
    for (const auto& r : j.at("rows")) {
      SampleRow row;
      row.case_id = r.at("case_id").get<std::string>();
      row.cell = parse_cell(r.at("cell").get<std::string>());
      if (!r.at("benchmark_cell").is_null()) {
        row.benchmark_cell = parse_benchmark_cell(r.at("benchmark_cell").get<std::string>());
      }
      row.sampling_cell = r.at("sampling_cell").get<std::string>();
      row.stratum = r.at("stratum").get<std::string>();
      row.sampling_weight = r.at("sampling_weight").get<double>();
      s.rows.push_back(std::move(row));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("SCLE sample file: ") + e.what());
  }
  if (hash_sample(s) != s.config_hash) {
    throw InputError("SCLE sample file: config_hash " + s.config_hash +
                     " does not match its contents (" + hash_sample(s) + ")");
  }
  return s;
}

void emit_review_sheet(const ScleSample& sample, const Dataset& dataset,
                       const SheetOptions& options, std::ostream& out) {
  for (const std::string& field : options.context_fields) {
    const bool in_subgroups = std::any_of(dataset.cases().begin(), dataset.cases().end(),
                                          [&](const EvaluationCase& c) { return c.subgroups.contains(field); });
    if (!in_subgroups && !dataset.metadata().contains(field)) {
      throw InputError("review sheet: unknown context field '" + field + "'");
    }
  }
  out << "# seed: " << sample.config.seed << '\n';
  out << "# config_hash: " << sample.config_hash << '\n';
  out << "# generated_at: " << options.generated_at.value_or("omitted (reproducible)") << '\n';

  std::vector<std::string> header = {"case_id", "cell", "benchmark_cell", "stratum",
                                     "sampling_weight", "reference", "score"};
  for (const std::string& f : options.context_fields) header.push_back(f);
  header.push_back("reviewer");
  for (std::string_view t : kTagColumns) header.emplace_back(t);
  header.insert(header.end(), {"triviality", "note", "verdict"});
  csv::write_row(out, header);

  std::vector<std::string> row;
  for (const SampleRow& r : sample.rows) {
    const EvaluationCase* c = dataset.find(r.case_id);
    if (!c) throw InputError("review sheet: sampled case_id '" + r.case_id + "' is not in the dataset");
    row = {r.case_id,
           std::string(to_string(r.cell)),
           r.benchmark_cell ? std::string(to_string(*r.benchmark_cell)) : std::string(),
           r.stratum,
           format_real(r.sampling_weight),
           std::string(to_string(c->reference)),
           c->score ? format_real(*c->score) : std::string()};
    for (const std::string& f : options.context_fields) {
      auto it = c->subgroups.find(f);
      if (it != c->subgroups.end()) {
        row.push_back(it->second);
      } else {
        auto m = dataset.metadata().find(f);
        row.push_back(m == dataset.metadata().end() ? std::string() : m->second);
      }
    }
    row.emplace_back();  // reviewer
    for (std::size_t t = 0; t < std::size(kTagColumns); ++t) row.emplace_back();
    row.insert(row.end(), {"", "", ""});
    csv::write_row(out, row);
  }
}

void emit_review_sheet(const ScleSample& sample, const Dataset& dataset,
                       const SheetOptions& options, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write review sheet '" + path.string() + "'");
  emit_review_sheet(sample, dataset, options, out);
}

AnnotationSet ingest_annotations(std::istream& sheet, const ScleSample& sample) {
  std::string text((std::istreambuf_iterator<char>(sheet)), std::istreambuf_iterator<char>());
  std::map<std::string, std::string> header_block;
  std::size_t pos = 0;
  std::size_t line = 1;
  while (pos < text.size() && text[pos] == '#') {
    const std::size_t eol = text.find('\n', pos);
    std::string comment = text.substr(pos + 1, (eol == std::string::npos ? text.size() : eol) - pos - 1);
    if (!comment.empty() && comment.back() == '\r') comment.pop_back();
    const auto colon = comment.find(':');
    if (colon != std::string::npos) header_block[trim(comment.substr(0, colon))] = trim(comment.substr(colon + 1));
    pos = eol == std::string::npos ? text.size() : eol + 1;
    ++line;
  }
  if (!header_block.contains("config_hash")) {
    throw InputError("review sheet: missing '# config_hash' header line");
  }
  if (header_block["config_hash"] != sample.config_hash) {
    throw InputError("review sheet: config hash mismatch: sheet has " + header_block["config_hash"] +
                     ", sample has " + sample.config_hash);
  }

  const auto records = csv::read(std::string_view(text).substr(pos), line);
  if (records.empty()) throw InputError("review sheet: missing column header");
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < records[0].fields.size(); ++i) col[to_lower(records[0].fields[i])] = i;
  for (std::string_view required : {"case_id", "reviewer", "triviality", "note", "verdict"}) {
    if (!col.contains(std::string(required))) {
      throw InputError("review sheet: missing column '" + std::string(required) + "'");
    }
  }
  for (std::string_view t : kTagColumns) {
    if (!col.contains(std::string(t))) throw InputError("review sheet: missing column '" + std::string(t) + "'");
  }

  AnnotationSet result;
  std::map<std::string, std::size_t> seen;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& fields = records[r].fields;
    const std::string where = "review sheet row " + std::to_string(r) + " (line " + std::to_string(records[r].line) + ")";
    if (fields.size() != records[0].fields.size()) {
      throw InputError(where + ": expected " + std::to_string(records[0].fields.size()) + " fields, got " +
                       std::to_string(fields.size()));
    }
    auto get = [&](std::string_view name) { return trim(fields[col.at(std::string(name))]); };
    ScleAnnotation a;
    a.case_id = get("case_id");
    const SampleRow* row = sample.find(a.case_id);
    if (!row) throw InputError(where + ": case_id '" + a.case_id + "' is not in the sample");
    if (auto [it, inserted] = seen.emplace(a.case_id, r); !inserted) {
      throw InputError(where + ": duplicate case_id '" + a.case_id + "' (also at row " +
                       std::to_string(it->second) + ")");
    }
    a.reviewer = get("reviewer");
    for (Tag tag : kAllTags) {
      const std::string value = to_lower(get(to_string(tag)));
      if (value.empty() || value == "0" || value == "no" || value == "false") continue;
      if (value == "1" || value == "x" || value == "yes" || value == "true") {
        a.tags.insert(tag);
        continue;
      }
      throw InputError(where + ", column '" + std::string(to_string(tag)) + "': unknown tag value '" +
                       get(to_string(tag)) + "' (use 1/x/yes or leave empty)");
    }
    if (const std::string t = get("triviality"); !t.empty()) {
      try {
        a.triviality = parse_triviality(t);
      } catch (const InputError& e) {
        throw InputError(where + ", column 'triviality': " + e.what());
      }
    }
    a.note = get("note");
    if (const std::string v = get("verdict"); !v.empty()) {
      try {
        a.verdict = parse_reference_label(v);
      } catch (const InputError& e) {
        throw InputError(where + ", column 'verdict': " + e.what());
      }
    }
    if (row->cell == Cell::kTP && !a.triviality) {
      result.warnings.push_back(where + ": sampled true positive '" + a.case_id + "' has no triviality rating");
    }
    const bool filled = !a.tags.empty() || a.triviality || !a.note.empty() || a.verdict;
    if (filled) result.annotations.push_back(std::move(a));
  }
  return result;
}

AnnotationSet ingest_annotations(const std::filesystem::path& sheet, const ScleSample& sample) {
  std::ifstream in(sheet, std::ios::binary);
  if (!in) throw InputError("cannot open review sheet '" + sheet.string() + "'");
  return ingest_annotations(in, sample);
}

ScleSummary aggregate(const std::vector<ScleAnnotation>& annotations, const ScleSample& sample,
                      const AggregateOptions& options) {
  std::map<std::string, const ScleAnnotation*> by_case;
  for (const ScleAnnotation& a : annotations) {
    if (!sample.find(a.case_id)) {
      throw InputError("aggregate: annotation for case_id '" + a.case_id + "' which is not in the sample");
    }
    if (!by_case.emplace(a.case_id, &a).second) {
      throw InputError("aggregate: duplicate annotation for case_id '" + a.case_id + "'");
    }
  }
  auto annotation_of = [&](const SampleRow& r) -> const ScleAnnotation* {
    auto it = by_case.find(r.case_id);
    return it == by_case.end() ? nullptr : it->second;
  };

  ScleSummary summary;
  summary.annotations = annotations.size();
  summary.no_findings = annotations.empty();
  const std::uint64_t stream = derive_seed(options.seed, "scle.aggregate");

  std::map<Tag, std::size_t> totals;
  for (std::size_t ci = 0; ci < sample.cells.size(); ++ci) {
    const CellAllocation& alloc = sample.cells[ci];
    if (alloc.sampled == 0) continue;
    CellSummary cs;
    cs.cell = alloc.cell;
    cs.sample_size = alloc.sampled;
    cs.population = alloc.population;
    cs.sampling_weight = static_cast<double>(alloc.population) / static_cast<double>(alloc.sampled);
    for (Tag tag : kAllTags) {
      TagStat st;
      for (const SampleRow& r : sample.rows) {
        if (r.sampling_cell != alloc.cell) continue;
        const ScleAnnotation* a = annotation_of(r);
        if (a && a->tags.contains(tag)) ++st.count;
      }
      st.rate = static_cast<double>(st.count) / static_cast<double>(cs.sample_size);
      const auto [lo, hi] = bootstrap_proportion(st.count, cs.sample_size, options,
                                                 substream_seed(stream, ci * 8 + static_cast<std::size_t>(tag)));
      st.ci_low = lo;
      st.ci_high = hi;
      const double pop = static_cast<double>(cs.population);
      st.projected_count = st.rate * pop;
      st.projected_low = lo * pop;
      st.projected_high = hi * pop;
      totals[tag] += st.count;
      cs.tags[std::string(to_string(tag))] = st;
    }
    summary.cells.push_back(std::move(cs));
  }

  TrivialitySummary& tv = summary.triviality;
  for (const SampleRow& r : sample.rows) {
    if (r.cell != Cell::kTP) continue;
    ++tv.sampled_tp;
    const ScleAnnotation* a = annotation_of(r);
    if (!a || !a->triviality) {
      ++tv.missing;
      continue;
    }
    switch (*a->triviality) {
      case Triviality::kTrivial:
        ++tv.trivial;
        break;
      case Triviality::kNonTrivial:
        ++tv.non_trivial;
        break;
      case Triviality::kUnclear:
        ++tv.unclear;
        break;
    }
  }
  if (tv.sampled_tp > 0) {
    tv.rate = static_cast<double>(tv.trivial) / static_cast<double>(tv.sampled_tp);
    const auto [lo, hi] = bootstrap_proportion(tv.trivial, tv.sampled_tp, options,
                                               derive_seed(stream, "triviality"));
    tv.ci_low = lo;
    tv.ci_high = hi;
  }

  for (const SampleRow& r : sample.rows) {
    const ScleAnnotation* a = annotation_of(r);
    if (!a) continue;
    if (a->tags.contains(Tag::kNeverEvent)) {
      summary.never_events.push_back({r.case_id, std::string(to_string(r.cell)), a->note});
    }
    if (!r.stratum.empty()) {
      auto& bucket = summary.per_stratum[r.stratum];
      for (Tag tag : a->tags) ++bucket[std::string(to_string(tag))];
    }
    if (a->verdict) summary.verdicts.emplace_back(r.case_id, std::string(to_string(*a->verdict)));
  }
  for (Tag tag : kAllTags) {
    if (totals[tag] > 0) {
      summary.remedial_actions.push_back({std::string(remedial_code(tag)), std::string(to_string(tag)),
                                          totals[tag], std::string(remedial_action(tag))});
    }
  }
  return summary;
}

std::string summary_to_json(const ScleSummary& s) {
  json j;
  j["state"] = s.no_findings ? "no_findings" : "findings";
  j["annotations"] = s.annotations;
  j["cells"] = json::array();
  for (const CellSummary& c : s.cells) {
    json tags = json::object();
    for (const auto& [name, st] : c.tags) tags[name] = tag_stat_json(st);
    j["cells"].push_back({{"cell", c.cell},
                          {"sample_size", c.sample_size},
                          {"population", c.population},
                          {"sampling_weight", c.sampling_weight},
                          {"tags", tags}});
  }
  const TrivialitySummary& t = s.triviality;
  j["triviality"] = {{"sampled_tp", t.sampled_tp},
                     {"trivial", t.trivial},
                     {"non_trivial", t.non_trivial},
                     {"unclear", t.unclear},
                     {"missing", t.missing},
                     {"rate", t.rate ? json(*t.rate) : json(nullptr)},
                     {"ci_low", t.ci_low},
                     {"ci_high", t.ci_high}};
  j["never_events"] = json::array();
  for (const NeverEventItem& n : s.never_events) {
    j["never_events"].push_back({{"case_id", n.case_id}, {"cell", n.cell}, {"note", n.note}});
  }
  j["per_stratum"] = s.per_stratum;
  j["remedial_actions"] = json::array();
  for (const RemedialAction& a : s.remedial_actions) {
    j["remedial_actions"].push_back({{"code", a.code}, {"tag", a.tag}, {"count", a.count}, {"action", a.action}});
  }
  j["verdicts"] = json::array();
  for (const auto& [id, label] : s.verdicts) j["verdicts"].push_back({{"case_id", id}, {"verdict", label}});
  return j.dump(2);
}

std::string summary_to_markdown(const ScleSummary& s) {
  std::ostringstream md;
  md << "## Structured case-level examination\n\n";
  if (s.no_findings) {
    md << "No findings: no annotations were returned.\n";
    return md.str();
  }
  md << "Annotated cases: " << s.annotations << "\n\n";
  md << "| Cell | Sampled | Population | Tag | Count | Rate | 95% interval | Projected count |\n";
  md << "|---|---|---|---|---|---|---|---|\n";
  for (const CellSummary& c : s.cells) {
    for (const auto& [name, st] : c.tags) {
      if (st.count == 0) continue;
      md << "| " << c.cell << " | " << c.sample_size << " | " << c.population << " | " << name << " | "
         << st.count << " | " << json(st.rate).dump() << " | [" << json(st.ci_low).dump() << ", "
         << json(st.ci_high).dump() << "] | " << json(st.projected_count).dump() << " |\n";
    }
  }
  md << "\n### Triviality of true positives\n\n";
  const TrivialitySummary& t = s.triviality;
  md << "Sampled TPs: " << t.sampled_tp << "; trivial " << t.trivial << ", non-trivial " << t.non_trivial
     << ", unclear " << t.unclear << ", not rated " << t.missing << ".\n";
  if (t.rate) {
    md << "Triviality rate: " << json(*t.rate).dump() << " [" << json(t.ci_low).dump() << ", "
       << json(t.ci_high).dump() << "]\n";
  }
  md << "\n### Never events\n\n";
  if (s.never_events.empty()) {
    md << "None reported.\n";
  } else {
    for (const NeverEventItem& n : s.never_events) {
      md << "- `" << n.case_id << "` (" << n.cell << ")" << (n.note.empty() ? "" : ": " + n.note) << "\n";
    }
  }
  if (!s.remedial_actions.empty()) {
    md << "\n### Suggested remedial actions (advisory)\n\n";
    for (const RemedialAction& a : s.remedial_actions) {
      md << "- " << a.code << " (" << a.tag << " x" << a.count << "): " << a.action << "\n";
    }
  }
  return md.str();
}

Dataset apply_verdicts(const Dataset& dataset, const std::vector<ScleAnnotation>& annotations) {
  std::vector<EvaluationCase> cases(dataset.cases().begin(), dataset.cases().end());
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < cases.size(); ++i) index[cases[i].case_id] = i;
  std::size_t changed = 0;
  for (const ScleAnnotation& a : annotations) {
    if (!a.verdict) continue;
    auto it = index.find(a.case_id);
    if (it == index.end()) throw InputError("apply_verdicts: unknown case_id '" + a.case_id + "'");
    if (cases[it->second].reference != *a.verdict) {
      cases[it->second].reference = *a.verdict;
      ++changed;
    }
  }
  Metadata metadata = dataset.metadata();
  int revision = 0;
  if (auto it = metadata.find("revision"); it != metadata.end()) {
    try {
      revision = std::stoi(it->second);
    } catch (const std::exception&) {
      revision = 0;
    }
  }
  metadata["revision"] = std::to_string(revision + 1);
  metadata["revision_note"] = "reviewer verdicts changed the reference label of " + std::to_string(changed) + " case(s)";
  return Dataset(std::move(cases), {dataset.design().begin(), dataset.design().end()}, std::move(metadata));
}

}  // namespace rareval::scle
