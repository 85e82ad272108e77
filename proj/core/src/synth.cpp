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

#include "rareval/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include <json.hpp>

#include "rareval/common.hpp"

namespace rareval::synth {
namespace {

using json = nlohmann::ordered_json;

std::string_view to_string(ScoreFamily f) {
  return f == ScoreFamily::kUniform ? "uniform" : "logit_normal";
}

ScoreFamily parse_family(std::string_view text) {
  const std::string v = to_lower(text);
  if (v == "uniform") return ScoreFamily::kUniform;
  if (v == "logit_normal") return ScoreFamily::kLogitNormal;
  throw InputError("unknown score family '" + std::string(text) + "'");
}

std::string_view to_string(Selector s) {
  switch (s) {
    case Selector::kPositive:
      return "positive";
    case Selector::kNegative:
      return "negative";
    case Selector::kAll:
      return "all";
  }
  return "all";
}

Selector parse_selector(std::string_view text) {
  const std::string v = to_lower(text);
  if (v == "positive") return Selector::kPositive;
  if (v == "negative") return Selector::kNegative;
  if (v == "all") return Selector::kAll;
  throw InputError("unknown enrichment selector '" + std::string(text) + "'");
}

bool matches(Selector s, bool latent_positive) {
  return s == Selector::kAll || (s == Selector::kPositive) == latent_positive;
}

std::string case_id(std::uint64_t i, std::uint64_t n) {
  std::string digits = std::to_string(i + 1);
  const std::size_t width = std::to_string(n).size();
  return "c" + std::string(width - std::min(width, digits.size()), '0') + digits;
}

json truth_point_json(const TruthPoint& p) {
  json j;
  j["threshold"] = p.threshold;
  j["tp"] = p.tp;
  j["fp"] = p.fp;
  j["fn"] = p.fn;
  j["tn"] = p.tn;
  j["recall"] = p.recall ? json(*p.recall) : json(nullptr);
  j["precision"] = p.precision ? json(*p.precision) : json(nullptr);
  j["specificity"] = p.specificity ? json(*p.specificity) : json(nullptr);
  return j;
}

}  // namespace

void validate(const PopulationSpec& spec) {
  if (spec.n == 0) throw InputError("synth: n must be positive");
  if (!(spec.prevalence > 0.0 && spec.prevalence < 1.0)) {
    throw InputError("synth: prevalence must be in (0, 1)");
  }
  if (!(spec.separation >= 0.0) || !std::isfinite(spec.separation)) {
    throw InputError("synth: separation must be non-negative");
  }
  if (!(spec.label_noise >= 0.0 && spec.label_noise < 1.0)) {
    throw InputError("synth: label_noise must be in [0, 1)");
  }
  if (!(spec.flip_probability >= 0.0 && spec.flip_probability <= 1.0)) {
    throw InputError("synth: flip_probability must be in [0, 1]");
  }
  if (spec.benchmark_flip_probability &&
      !(*spec.benchmark_flip_probability >= 0.0 && *spec.benchmark_flip_probability <= 1.0)) {
    throw InputError("synth: benchmark_flip_probability must be in [0, 1]");
  }
  if (spec.score_decimals && (*spec.score_decimals < 0 || *spec.score_decimals > 15)) {
    throw InputError("synth: score_decimals must be in [0, 15]");
  }
  for (const EnrichmentRule& r : spec.enrichment) {
    if (!(r.inclusion_probability > 0.0 && r.inclusion_probability <= 1.0)) {
      throw InputError("synth: enrichment inclusion_probability must be in (0, 1]");
    }
  }
  for (const SubgroupSpec& g : spec.subgroups) {
    if (g.name.empty() || g.categories.empty()) {
      throw InputError("synth: subgroup needs a name and at least one category");
    }
  }
}

PopulationSpec population_spec_from_json(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string("synth spec: ") + e.what());
  }
  PopulationSpec spec;
  try {
    spec.n = doc.value("n", spec.n);
    spec.prevalence = doc.value("prevalence", spec.prevalence);
    spec.fixed_count = doc.value("fixed_count", spec.fixed_count);
    if (doc.contains("family")) spec.family = parse_family(doc["family"].get<std::string>());
    spec.separation = doc.value("separation", spec.separation);
    if (doc.contains("score_decimals") && !doc["score_decimals"].is_null()) {
      spec.score_decimals = doc["score_decimals"].get<int>();
    }
    spec.threshold = doc.value("threshold", spec.threshold);
    if (doc.contains("enrichment")) {
      for (const auto& r : doc["enrichment"]) {
        spec.enrichment.push_back({parse_selector(r.at("selector").get<std::string>()),
                                   r.at("inclusion_probability").get<double>()});
      }
    }
    spec.label_noise = doc.value("label_noise", spec.label_noise);
    spec.n_runs = doc.value("n_runs", spec.n_runs);
    spec.flip_probability = doc.value("flip_probability", spec.flip_probability);
    if (doc.contains("benchmark_flip_probability") && !doc["benchmark_flip_probability"].is_null()) {
      spec.benchmark_flip_probability = doc["benchmark_flip_probability"].get<double>();
    }
    if (doc.contains("subgroups")) {
      for (const auto& g : doc["subgroups"]) {
        spec.subgroups.push_back({g.at("name").get<std::string>(),
                                  g.at("categories").get<std::vector<std::string>>()});
      }
    }
    if (doc.contains("truth_thresholds")) {
      spec.truth_thresholds = doc["truth_thresholds"].get<std::vector<double>>();
    }
    spec.seed = doc.value("seed", spec.seed);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("synth spec: ") + e.what());
  }
  validate(spec);
  return spec;
}

std::string population_spec_to_json(const PopulationSpec& spec) {
  json j;
  j["n"] = spec.n;
  j["prevalence"] = spec.prevalence;
  j["fixed_count"] = spec.fixed_count;
  j["family"] = to_string(spec.family);
  j["separation"] = spec.separation;
  j["score_decimals"] = spec.score_decimals ? json(*spec.score_decimals) : json(nullptr);
  j["threshold"] = spec.threshold;
  j["enrichment"] = json::array();
  for (const EnrichmentRule& r : spec.enrichment) {
    j["enrichment"].push_back(
        {{"selector", to_string(r.selector)}, {"inclusion_probability", r.inclusion_probability}});
  }
  j["label_noise"] = spec.label_noise;
  j["n_runs"] = spec.n_runs;
  j["flip_probability"] = spec.flip_probability;
  j["benchmark_flip_probability"] =
      spec.benchmark_flip_probability ? json(*spec.benchmark_flip_probability) : json(nullptr);
  j["subgroups"] = json::array();
  for (const SubgroupSpec& g : spec.subgroups) {
    j["subgroups"].push_back({{"name", g.name}, {"categories", g.categories}});
  }
  j["truth_thresholds"] = spec.truth_thresholds;
  j["seed"] = spec.seed;
  return j.dump(2);
}

PopulationTruth::PopulationTruth(std::vector<double> scores, std::vector<bool> reference_positive,
                                 std::uint64_t latent_positives)
    : scores_(std::move(scores)),
      reference_positive_(std::move(reference_positive)),
      latent_positives_(latent_positives) {
  positives_ = static_cast<std::uint64_t>(
      std::count(reference_positive_.begin(), reference_positive_.end(), true));
}

TruthPoint PopulationTruth::at(double threshold) const {
  TruthPoint p;
  p.threshold = threshold;
  for (std::size_t i = 0; i < scores_.size(); ++i) {
    const bool flagged = scores_[i] >= threshold;
    if (reference_positive_[i]) {
      ++(flagged ? p.tp : p.fn);
    } else {
      ++(flagged ? p.fp : p.tn);
    }
  }
  auto ratio = [](std::uint64_t num, std::uint64_t den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  p.recall = ratio(p.tp, p.tp + p.fn);
  p.precision = ratio(p.tp, p.tp + p.fp);
  p.specificity = ratio(p.tn, p.tn + p.fp);
  return p;
}

double PopulationTruth::prevalence() const {
  return scores_.empty() ? 0.0 : static_cast<double>(positives_) / static_cast<double>(scores_.size());
}

Generated generate(const PopulationSpec& spec) {
  validate(spec);
  const std::uint64_t n = spec.n;

  // Independent substreams per concern, so e.g. adding enrichment does not
  // change the population itself.
  Engine label_engine = make_engine(derive_seed(spec.seed, "synth.latent"));
  std::vector<bool> latent(n, false);
  std::uint64_t latent_positives = 0;
  if (spec.fixed_count) {
    latent_positives = static_cast<std::uint64_t>(std::llround(spec.prevalence * static_cast<double>(n)));
    std::vector<std::uint64_t> idx(n);
    for (std::uint64_t i = 0; i < n; ++i) idx[i] = i;
    for (std::uint64_t i = 0; i < latent_positives; ++i) {
      const std::uint64_t j = i + uniform_index(label_engine, n - i);
      std::swap(idx[i], idx[j]);
      latent[idx[i]] = true;
    }
  } else {
    for (std::uint64_t i = 0; i < n; ++i) {
      latent[i] = uniform01(label_engine) < spec.prevalence;
      latent_positives += latent[i] ? 1 : 0;
    }
  }

  Engine score_engine = make_engine(derive_seed(spec.seed, "synth.scores"));
  std::normal_distribution<double> normal(0.0, 1.0);
  const double rounding = spec.score_decimals ? std::pow(10.0, *spec.score_decimals) : 0.0;
  std::vector<double> scores(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    double s = 0.0;
    if (spec.family == ScoreFamily::kLogitNormal) {
      const double x = normal(score_engine) + (latent[i] ? 0.5 : -0.5) * spec.separation;
      s = 1.0 / (1.0 + std::exp(-x));
    } else {
      const double u = uniform01(score_engine) + (latent[i] ? spec.separation : 0.0);
      s = u / (1.0 + spec.separation);
    }
    if (spec.score_decimals) s = std::round(s * rounding) / rounding;
    scores[i] = s;
  }

  Engine noise_engine = make_engine(derive_seed(spec.seed, "synth.label_noise"));
  std::vector<bool> reference(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    const bool flip = spec.label_noise > 0.0 && uniform01(noise_engine) < spec.label_noise;
    reference[i] = latent[i] != flip;
  }

  // Strata: first matching enrichment rule wins; unmatched cases fall into
  // a census stratum with inclusion probability 1.
  std::vector<StratumSpec> design;
  std::vector<int> rule_of(n, -1);
  const bool enriched = !spec.enrichment.empty();
  if (enriched) {
    for (std::size_t r = 0; r < spec.enrichment.size(); ++r) {
      const EnrichmentRule& rule = spec.enrichment[r];
      design.push_back({"s" + std::to_string(r + 1) + "_" + std::string(to_string(rule.selector)),
                        rule.inclusion_probability,
                        "enrichment of latent " + std::string(to_string(rule.selector)) + " cases"});
    }
    design.push_back({"rest", 1.0, "cases matched by no enrichment rule"});
    for (std::uint64_t i = 0; i < n; ++i) {
      rule_of[i] = static_cast<int>(spec.enrichment.size());
      for (std::size_t r = 0; r < spec.enrichment.size(); ++r) {
        if (matches(spec.enrichment[r].selector, latent[i])) {
          rule_of[i] = static_cast<int>(r);
          break;
        }
      }
    }
  }

  Engine sample_engine = make_engine(derive_seed(spec.seed, "synth.sample"));
  Engine extra_engine = make_engine(derive_seed(spec.seed, "synth.runs"));
  Engine subgroup_engine = make_engine(derive_seed(spec.seed, "synth.subgroups"));
  std::vector<EvaluationCase> cases;
  std::vector<bool> sample_latent;
  std::vector<std::size_t> stratum_sizes(design.size(), 0);
  for (std::uint64_t i = 0; i < n; ++i) {
    if (enriched) {
      const double pi = design[static_cast<std::size_t>(rule_of[i])].inclusion_probability;
      if (pi < 1.0 && !(uniform01(sample_engine) < pi)) continue;
      ++stratum_sizes[static_cast<std::size_t>(rule_of[i])];
    }
    EvaluationCase c;
    c.case_id = case_id(i, n);
    c.reference = reference[i] ? ReferenceLabel::kPositive : ReferenceLabel::kNegative;
    c.score = scores[i];
    c.predicted = scores[i] >= spec.threshold;
    if (spec.benchmark_flip_probability) {
      const bool flip = uniform01(extra_engine) < *spec.benchmark_flip_probability;
      c.benchmark_predicted = *c.predicted != flip;
    }
    for (std::size_t r = 0; r < spec.n_runs; ++r) {
      const bool flip = uniform01(extra_engine) < spec.flip_probability;
      c.repeated_labels.push_back(*c.predicted != flip);
    }
    for (const SubgroupSpec& g : spec.subgroups) {
      c.subgroups[g.name] = g.categories[uniform_index(subgroup_engine, g.categories.size())];
    }
    if (enriched) c.stratum_id = design[static_cast<std::size_t>(rule_of[i])].stratum_id;
    cases.push_back(std::move(c));
    sample_latent.push_back(latent[i]);
  }

  if (enriched) {
    // Drop the census stratum if no rule left anything unmatched.
    std::vector<StratumSpec> used;
    for (std::size_t s = 0; s < design.size(); ++s) {
      const bool is_rest = s + 1 == design.size();
      if (stratum_sizes[s] == 0) {
        if (is_rest) {
          const bool any_rest = std::any_of(rule_of.begin(), rule_of.end(), [&](int r) {
            return static_cast<std::size_t>(r) == s;
          });
          if (!any_rest) continue;
        }
        throw InfeasibleError("synth: enrichment stratum '" + design[s].stratum_id +
                              "' is empty in the drawn sample");
      }
      used.push_back(design[s]);
    }
    design = std::move(used);
  }

  Metadata metadata{{"source", "synth"},
                    {"seed", std::to_string(spec.seed)},
                    {"population_size", std::to_string(n)}};
  Generated out{Dataset(std::move(cases), std::move(design), std::move(metadata)),
                PopulationTruth(std::move(scores), std::move(reference), latent_positives),
                std::move(sample_latent)};
  return out;
}

std::string truth_sidecar_json(const PopulationSpec& spec, const PopulationTruth& truth) {
  json j;
  j["kind"] = "synth_truth_sidecar";
  j["non_ingestible"] = true;
  j["note"] = "oracle values for verification only; evaluation commands refuse this file";
  j["seed"] = spec.seed;
  j["population_size"] = truth.size();
  j["reference_positives"] = truth.positives();
  j["latent_positives"] = truth.latent_positives();
  j["prevalence"] = truth.prevalence();
  j["at_threshold"] = truth_point_json(truth.at(spec.threshold));
  j["grid"] = json::array();
  for (double t : spec.truth_thresholds) j["grid"].push_back(truth_point_json(truth.at(t)));
  return j.dump(2);
}

void write_truth_sidecar(const std::filesystem::path& path, const PopulationSpec& spec,
                         const PopulationTruth& truth) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write truth sidecar '" + path.string() + "'");
  out << truth_sidecar_json(spec, truth) << '\n';
}

}  // namespace rareval::synth
