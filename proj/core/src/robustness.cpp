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

#include "rareval/robustness.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>

#include "json_io.hpp"
#include "rareval/common.hpp"
#include "sampling.hpp"

namespace rareval {
namespace {

using detail::json;

constexpr const char* kUnknownCategory = "unknown";

// Pearson statistic of the 2 x k table (errors, non-errors) x category.
double chi_squared_statistic(const std::vector<std::size_t>& errors,
                             const std::vector<std::size_t>& sizes, std::size_t total_errors,
                             std::size_t total) {
  const double rate = static_cast<double>(total_errors) / static_cast<double>(total);
  double stat = 0.0;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    const double n = static_cast<double>(sizes[k]);
    const double expected_err = n * rate;
    const double expected_ok = n - expected_err;
    const double observed_err = static_cast<double>(errors[k]);
    const double observed_ok = n - observed_err;
    if (expected_err > 0.0) stat += (observed_err - expected_err) * (observed_err - expected_err) / expected_err;
    if (expected_ok > 0.0) stat += (observed_ok - expected_ok) * (observed_ok - expected_ok) / expected_ok;
  }
  return stat;
}

HeterogeneityScreen screen(const std::vector<bool>& is_error, const std::vector<std::size_t>& category,
                           std::size_t n_categories, const SubsetOptions& options) {
  HeterogeneityScreen h;
  h.alpha = options.alpha;
  const std::size_t total = is_error.size();
  const std::size_t total_errors = static_cast<std::size_t>(std::count(is_error.begin(), is_error.end(), true));
  if (n_categories < 2 || total == 0) {
    h.test = "none";
    return h;
  }
  std::vector<std::size_t> sizes(n_categories, 0), errors(n_categories, 0);
  for (std::size_t i = 0; i < total; ++i) {
    ++sizes[category[i]];
    if (is_error[i]) ++errors[category[i]];
  }
  h.degrees_of_freedom = n_categories - 1;
  h.statistic = chi_squared_statistic(errors, sizes, total_errors, total);
  if (total_errors == 0 || total_errors == total) {
    h.test = "chi_squared";
    h.p_value = 1.0;
    return h;
  }
  const double rate = static_cast<double>(total_errors) / static_cast<double>(total);
  bool small = false;
  for (std::size_t n : sizes) {
    const double e = static_cast<double>(n) * rate;
    if (e < 5.0 || static_cast<double>(n) - e < 5.0) small = true;
  }
  if (!small) {
    h.test = "chi_squared";
    boost::math::chi_squared_distribution<double> dist(static_cast<double>(h.degrees_of_freedom));
    h.p_value = boost::math::cdf(boost::math::complement(dist, h.statistic));
  } else {
    // Permuting the error labels over cases keeps both margins fixed.
    h.test = "monte_carlo_permutation";
    h.permutations = options.permutations;
    const std::uint64_t stream = derive_seed(options.seed, "robustness.permutation");
    std::vector<bool> shuffled = is_error;
    std::size_t at_least = 0;
    std::vector<std::size_t> perm_errors(n_categories);
    for (std::size_t b = 0; b < options.permutations; ++b) {
      Engine engine = make_engine(stream, b);
      for (std::size_t i = total; i > 1; --i) {
        const auto j = static_cast<std::size_t>(uniform_index(engine, i));
        const bool tmp = shuffled[i - 1];
        shuffled[i - 1] = shuffled[j];
        shuffled[j] = tmp;
      }
      std::fill(perm_errors.begin(), perm_errors.end(), 0);
      for (std::size_t i = 0; i < total; ++i) {
        if (shuffled[i]) ++perm_errors[category[i]];
      }
      const double stat = chi_squared_statistic(perm_errors, sizes, total_errors, total);
      if (stat >= h.statistic * (1.0 - 1e-12)) ++at_least;
    }
    h.p_value = static_cast<double>(at_least + 1) / static_cast<double>(options.permutations + 1);
  }
  h.flagged = *h.p_value < options.alpha;
  return h;
}

struct CaseCell {
  std::size_t cell;  // 0 tp, 1 fp, 2 fn, 3 tn
  double weight;
  std::size_t stratum;
};

std::vector<CaseCell> case_cells(const Dataset& dataset, std::vector<std::string>* stratum_names) {
  std::map<std::string, std::size_t> stratum_index;
  for (const StratumSpec& s : dataset.design()) {
    stratum_index[s.stratum_id] = stratum_names->size();
    stratum_names->push_back(s.stratum_id);
  }
  if (stratum_names->empty()) stratum_names->push_back("");
  std::vector<CaseCell> out;
  for (const EvaluationCase& c : dataset.cases()) {
    if (!is_evaluable(c.reference)) continue;
    if (!c.predicted) throw InputError("case_id '" + c.case_id + "' has no predicted label");
    const bool positive = c.reference == ReferenceLabel::kPositive;
    const std::size_t cell = positive ? (*c.predicted ? 0 : 2) : (*c.predicted ? 1 : 3);
    out.push_back({cell, dataset.weight(c), dataset.has_design() ? stratum_index.at(*c.stratum_id) : 0});
  }
  return out;
}

ConfusionCounts counts_from(const std::array<double, 4>& cells, bool weighted) {
  ConfusionCounts c;
  c.tp = cells[0];
  c.fp = cells[1];
  c.fn = cells[2];
  c.tn = cells[3];
  c.weighted = weighted;
  return c;
}

}  // namespace

SubsetReport subset_metrics(const Dataset& dataset, std::string_view attribute,
                            const std::vector<Metric>& metrics, const SubsetOptions& options) {
  const std::string attr(attribute);
  const auto cases = dataset.cases();
  const bool present = std::any_of(cases.begin(), cases.end(),
                                   [&](const EvaluationCase& c) { return c.subgroups.contains(attr); });
  if (!present) throw InputError("subset_metrics: attribute '" + attr + "' is absent from every case");

  std::map<std::string, std::vector<EvaluationCase>> groups;
  for (const EvaluationCase& c : cases) {
    if (!is_evaluable(c.reference)) continue;
    if (!c.predicted) throw InputError("subset_metrics: case_id '" + c.case_id + "' has no predicted label");
    auto it = c.subgroups.find(attr);
    groups[it == c.subgroups.end() ? std::string(kUnknownCategory) : it->second].push_back(c);
  }

  SubsetReport report;
  report.attribute = attr;
  report.metrics = metrics;
  std::vector<bool> is_error;
  std::vector<std::size_t> category;
  const std::vector<StratumSpec> design(dataset.design().begin(), dataset.design().end());
  for (auto& [name, members] : groups) {
    const std::size_t index = report.categories.size();
    for (const EvaluationCase& c : members) {
      is_error.push_back(*c.predicted != (c.reference == ReferenceLabel::kPositive));
      category.push_back(index);
    }
    CategoryReport cat;
    cat.category = name;
    cat.n = members.size();
    cat.counts = confusion(Dataset(std::move(members), design));
    for (Metric m : metrics) cat.estimates.push_back(estimate(m, cat.counts, options.intervals));
    report.total_n += cat.n;
    report.categories.push_back(std::move(cat));
  }
  report.heterogeneity = screen(is_error, category, report.categories.size(), options);
  return report;
}

StabilityReport stability(const Dataset& dataset) {
  StabilityReport report;
  if (dataset.empty()) throw InputError("stability: dataset is empty");
  const auto cases = dataset.cases();
  report.n_runs = cases.front().repeated_labels.size();
  for (const EvaluationCase& c : cases) {
    if (c.repeated_labels.empty()) {
      throw InputError("stability: case_id '" + c.case_id + "' has no repeated labels");
    }
    if (c.repeated_labels.size() != report.n_runs) {
      throw InputError("stability: case_id '" + c.case_id + "' has " +
                       std::to_string(c.repeated_labels.size()) + " runs, expected " +
                       std::to_string(report.n_runs));
    }
  }
  if (report.n_runs < 2) throw InputError("stability: at least 2 runs are needed");

  const double r = static_cast<double>(report.n_runs);
  const double pairs = r * (r - 1.0) / 2.0;
  std::size_t unanimous = 0;
  double agreement = 0.0;
  for (const EvaluationCase& c : cases) {
    const auto ones = static_cast<std::size_t>(std::count(c.repeated_labels.begin(), c.repeated_labels.end(), true));
    const std::size_t zeros = report.n_runs - ones;
    if (ones == 0 || zeros == 0) ++unanimous;
    const double k1 = static_cast<double>(ones), k0 = static_cast<double>(zeros);
    agreement += (k1 * (k1 - 1.0) / 2.0 + k0 * (k0 - 1.0) / 2.0) / pairs;
    report.flips.emplace_back(c.case_id, std::min(ones, zeros));
  }
  report.n_cases = cases.size();
  report.unanimity_rate = static_cast<double>(unanimous) / static_cast<double>(cases.size());
  report.pairwise_agreement = agreement / static_cast<double>(cases.size());
  return report;
}

std::string_view to_string(ResamplingScheme scheme) {
  return scheme == ResamplingScheme::kBootstrap ? "bootstrap" : "k_fold";
}

ResamplingScheme parse_resampling_scheme(std::string_view text) {
  const std::string v = to_lower(text);
  if (v == "bootstrap") return ResamplingScheme::kBootstrap;
  if (v == "k_fold" || v == "kfold" || v == "k-fold") return ResamplingScheme::kKFold;
  throw InputError("unknown resampling scheme '" + std::string(text) + "' (expected bootstrap or k_fold)");
}

ResamplingSummary resampling_variability(const Dataset& dataset, Metric metric,
                                         ResamplingScheme scheme, std::size_t n,
                                         std::uint64_t seed, double ci_level) {
  if (!(ci_level > 0.0 && ci_level < 1.0)) throw InputError("resampling: ci_level must be in (0, 1)");
  std::vector<std::string> strata;
  const std::vector<CaseCell> cells = case_cells(dataset, &strata);
  const bool weighted = dataset.has_design();

  ResamplingSummary out;
  out.metric = std::string(to_string(metric));
  out.scheme = scheme;
  out.resamples = n;
  out.seed = seed;
  out.ci_level = ci_level;
  out.point_estimate = metric_value(metric, confusion(dataset));

  if (scheme == ResamplingScheme::kBootstrap) {
    if (n == 0) throw InputError("resampling: number of bootstrap resamples must be positive");
    std::vector<std::array<std::uint64_t, 4>> tallies(strata.size(), {0, 0, 0, 0});
    std::vector<double> weights(strata.size(), 1.0);
    for (const CaseCell& c : cells) {
      ++tallies[c.stratum][c.cell];
      weights[c.stratum] = c.weight;
    }
    const std::uint64_t stream = derive_seed(seed, "robustness.bootstrap");
    for (std::size_t b = 0; b < n; ++b) {
      Engine engine = make_engine(stream, b);
      std::array<double, 4> sum{};
      for (std::size_t s = 0; s < strata.size(); ++s) {
        const std::uint64_t size = std::accumulate(tallies[s].begin(), tallies[s].end(), std::uint64_t{0});
        const auto draw = detail::multinomial4(engine, size, tallies[s]);
        for (std::size_t k = 0; k < 4; ++k) sum[k] += weights[s] * static_cast<double>(draw[k]);
      }
      out.values.push_back(metric_value(metric, counts_from(sum, weighted)));
    }
  } else {
    if (n < 2) throw InputError("resampling: k_fold needs k >= 2");
    if (n > cells.size()) {
      throw InputError("resampling: k = " + std::to_string(n) + " exceeds the " +
                       std::to_string(cells.size()) + " evaluable cases");
    }
    std::vector<std::size_t> order(cells.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Engine engine = make_engine(derive_seed(seed, "robustness.kfold"));
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[static_cast<std::size_t>(uniform_index(engine, i))]);
    }
    std::vector<std::array<double, 4>> folds(n, std::array<double, 4>{});
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      const CaseCell& c = cells[order[pos]];
      folds[pos % n][c.cell] += c.weight;
    }
    for (const auto& f : folds) out.values.push_back(metric_value(metric, counts_from(f, weighted)));
  }

  std::vector<double> defined;
  for (const auto& v : out.values) {
    if (v) defined.push_back(*v);
  }
  out.undefined = out.values.size() - defined.size();
  if (!defined.empty()) {
    const double mean = std::accumulate(defined.begin(), defined.end(), 0.0) / static_cast<double>(defined.size());
    double ss = 0.0;
    for (double v : defined) ss += (v - mean) * (v - mean);
    out.mean = mean;
    out.standard_deviation = defined.size() > 1 ? std::sqrt(ss / static_cast<double>(defined.size() - 1)) : 0.0;
    std::sort(defined.begin(), defined.end());
    const double alpha = 1.0 - ci_level;
    out.ci_low = detail::percentile(defined, alpha / 2.0);
    out.ci_high = detail::percentile(defined, 1.0 - alpha / 2.0);
  }
  return out;
}

std::string to_json(const SubsetReport& report) {
  json j;
  j["attribute"] = report.attribute;
  j["total_n"] = report.total_n;
  j["metrics"] = json::array();
  for (Metric m : report.metrics) j["metrics"].push_back(to_string(m));
  j["categories"] = json::array();
  for (const CategoryReport& c : report.categories) {
    json estimates = json::array();
    for (const MetricEstimate& e : c.estimates) estimates.push_back(detail::to_json(e));
    j["categories"].push_back(
        {{"category", c.category}, {"n", c.n}, {"counts", detail::to_json(c.counts)}, {"estimates", estimates}});
  }
  const HeterogeneityScreen& h = report.heterogeneity;
  j["heterogeneity"] = {{"test", h.test},
                        {"statistic", h.statistic},
                        {"degrees_of_freedom", h.degrees_of_freedom},
                        {"p_value", detail::optional_json(h.p_value)},
                        {"permutations", h.permutations},
                        {"alpha", h.alpha},
                        {"flagged", h.flagged}};
  return j.dump();
}

std::string to_json(const StabilityReport& report) {
  json j;
  j["n_runs"] = report.n_runs;
  j["n_cases"] = report.n_cases;
  j["unanimity_rate"] = report.unanimity_rate;
  j["pairwise_agreement"] = report.pairwise_agreement;
  std::size_t unstable = 0;
  json flips = json::array();
  for (const auto& [id, count] : report.flips) {
    if (count == 0) continue;
    ++unstable;
    flips.push_back({{"case_id", id}, {"flips", count}});
  }
  j["unstable_cases"] = unstable;
  j["flips"] = flips;
  return j.dump();
}

std::string to_json(const ResamplingSummary& s) {
  json j;
  j["metric"] = s.metric;
  j["scheme"] = to_string(s.scheme);
  j["resamples"] = s.resamples;
  j["seed"] = s.seed;
  j["point_estimate"] = detail::optional_json(s.point_estimate);
  j["mean"] = detail::optional_json(s.mean);
  j["standard_deviation"] = detail::optional_json(s.standard_deviation);
  j["ci_low"] = detail::optional_json(s.ci_low);
  j["ci_high"] = detail::optional_json(s.ci_high);
  j["ci_level"] = s.ci_level;
  j["undefined"] = s.undefined;
  j["values"] = json::array();
  for (const auto& v : s.values) j["values"].push_back(detail::optional_json(v));
  j["note"] = "evaluation-set resampling; does not measure variability from retraining the model";
  return j.dump();
}

}  // namespace rareval
