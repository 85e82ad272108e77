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

#include "rareval/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include <boost/math/distributions/normal.hpp>

#include "rareval/common.hpp"
#include "sampling.hpp"

namespace rareval {
namespace {

double z_for_level(double ci_level) {
  if (!(ci_level > 0.0 && ci_level < 1.0)) {
    throw InputError("ci_level must be in (0, 1), got " + format_real(ci_level));
  }
  static const boost::math::normal standard;
  return boost::math::quantile(standard, 0.5 + ci_level / 2.0);
}

struct CellSelector {
  // Which cells feed numerator and denominator.
  bool num_tp, num_fp, num_fn, num_tn;
  bool den_tp, den_fp, den_fn, den_tn;
};

CellSelector selector(Metric metric) {
  switch (metric) {
    case Metric::kRecall:
      return {true, false, false, false, true, false, true, false};
    case Metric::kPrecision:
      return {true, false, false, false, true, true, false, false};
    case Metric::kSpecificity:
      return {false, false, false, true, false, true, false, true};
    case Metric::kNpv:
      return {false, false, false, true, false, false, true, true};
  }
  throw InvariantError("unhandled metric");
}

template <typename T>
std::pair<double, double> select(const CellSelector& s, T tp, T fp, T fn, T tn) {
  const double num = (s.num_tp ? double(tp) : 0.0) + (s.num_fp ? double(fp) : 0.0) +
                     (s.num_fn ? double(fn) : 0.0) + (s.num_tn ? double(tn) : 0.0);
  const double den = (s.den_tp ? double(tp) : 0.0) + (s.den_fp ? double(fp) : 0.0) +
                     (s.den_fn ? double(fn) : 0.0) + (s.den_tn ? double(tn) : 0.0);
  return {num, den};
}

using detail::multinomial;
using detail::percentile;

Interval bootstrap_interval(Metric metric, const ConfusionCounts& counts,
                            const IntervalOptions& options, double point) {
  const CellSelector s = selector(metric);
  // Cases are resampled from the pooled sample, so stratum sample sizes vary
  // between resamples as they do under independent inclusion.
  std::vector<std::uint64_t> cells;
  std::uint64_t n = 0;
  for (const StratumCells& st : counts.strata) {
    cells.insert(cells.end(), {st.tp, st.fp, st.fn, st.tn});
    n += st.total();
  }
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(std::max(options.bootstrap_resamples, 0)));
  for (int b = 0; b < options.bootstrap_resamples; ++b) {
    Engine engine = make_engine(derive_seed(options.seed, "metrics.bootstrap"),
                                static_cast<std::uint64_t>(b));
    const auto draw = multinomial(engine, n, cells);
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < counts.strata.size(); ++k) {
      const auto [sn, sd] = select(s, draw[4 * k], draw[4 * k + 1], draw[4 * k + 2], draw[4 * k + 3]);
      num += counts.strata[k].weight * sn;
      den += counts.strata[k].weight * sd;
    }
    if (den > 0.0) values.push_back(num / den);
  }
  if (values.empty()) return {point, point};
  std::sort(values.begin(), values.end());
  const double alpha = 1.0 - options.ci_level;
  Interval ci{percentile(values, alpha / 2.0), percentile(values, 1.0 - alpha / 2.0)};
  ci.low = std::min(ci.low, point);
  ci.high = std::max(ci.high, point);
  return ci;
}

}  // namespace

ConfusionCounts ConfusionCounts::scaled(double factor) const {
  ConfusionCounts out = *this;
  out.tp *= factor;
  out.fp *= factor;
  out.fn *= factor;
  out.tn *= factor;
  for (StratumCells& s : out.strata) s.weight *= factor;
  return out;
}

std::string_view to_string(Metric metric) {
  switch (metric) {
    case Metric::kRecall:
      return "recall";
    case Metric::kPrecision:
      return "precision";
    case Metric::kSpecificity:
      return "specificity";
    case Metric::kNpv:
      return "npv";
  }
  return "unknown";
}

Metric parse_metric(std::string_view name) {
  const std::string v = to_lower(name);
  if (v == "recall" || v == "sensitivity") return Metric::kRecall;
  if (v == "precision" || v == "ppv") return Metric::kPrecision;
  if (v == "specificity") return Metric::kSpecificity;
  if (v == "npv") return Metric::kNpv;
  throw InputError("unknown metric '" + std::string(name) +
                   "' (expected recall, precision, specificity or npv)");
}

ConfusionCounts confusion(const Dataset& dataset) {
  ConfusionCounts counts;
  counts.weighted = dataset.has_design();
  std::map<std::string, std::size_t> stratum_index;
  if (counts.weighted) {
    for (const StratumSpec& s : dataset.design()) {
      stratum_index[s.stratum_id] = counts.strata.size();
      counts.strata.push_back({s.stratum_id, 1.0 / s.inclusion_probability});
    }
  }
  for (const EvaluationCase& c : dataset.cases()) {
    if (!is_evaluable(c.reference)) continue;
    if (!c.predicted) {
      throw InputError("confusion: case_id '" + c.case_id + "' has no predicted label");
    }
    const bool positive = c.reference == ReferenceLabel::kPositive;
    const bool flagged = *c.predicted;
    const double w = dataset.weight(c);
    StratumCells* cells = nullptr;
    if (counts.weighted) cells = &counts.strata[stratum_index.at(*c.stratum_id)];
    if (positive && flagged) {
      counts.tp += w;
      if (cells) ++cells->tp;
    } else if (!positive && flagged) {
      counts.fp += w;
      if (cells) ++cells->fp;
    } else if (positive) {
      counts.fn += w;
      if (cells) ++cells->fn;
    } else {
      counts.tn += w;
      if (cells) ++cells->tn;
    }
  }
  return counts;
}

std::pair<double, double> metric_ratio(Metric metric, const ConfusionCounts& counts) {
  return select(selector(metric), counts.tp, counts.fp, counts.fn, counts.tn);
}

std::optional<double> metric_value(Metric metric, const ConfusionCounts& counts) {
  const auto [num, den] = metric_ratio(metric, counts);
  if (!(den > 0.0)) return std::nullopt;
  return num / den;
}

Interval wilson_interval(double successes, double trials, double ci_level) {
  if (!(trials > 0.0)) throw InputError("wilson_interval: trials must be positive");
  const double z = z_for_level(ci_level);
  const double z2 = z * z;
  const double p = successes / trials;
  const double center = (successes + z2 / 2.0) / (trials + z2);
  const double half =
      z / (trials + z2) * std::sqrt(std::max(0.0, successes * (trials - successes) / trials) + z2 / 4.0);
  Interval ci{std::max(0.0, center - half), std::min(1.0, center + half)};
  // Guard the containment invariant against rounding at p = 0 or 1.
  ci.low = std::min(ci.low, p);
  ci.high = std::max(ci.high, p);
  return ci;
}

MetricEstimate estimate(Metric metric, const ConfusionCounts& counts, const IntervalOptions& options) {
  MetricEstimate out;
  out.metric = std::string(to_string(metric));
  out.ci_level = options.ci_level;
  out.weighted = counts.weighted;
  z_for_level(options.ci_level);

  const auto [num, den] = metric_ratio(metric, counts);
  if (counts.weighted && !counts.strata.empty()) {
    const CellSelector s = selector(metric);
    double sum_w = 0.0, sum_w2 = 0.0;
    for (const StratumCells& st : counts.strata) {
      const double n = select(s, st.tp, st.fp, st.fn, st.tn).second;
      sum_w += st.weight * n;
      sum_w2 += st.weight * st.weight * n;
    }
    out.n_effective = sum_w2 > 0.0 ? sum_w * sum_w / sum_w2 : 0.0;
  } else {
    out.n_effective = den;
  }
  if (!(den > 0.0)) {
    out.interval_method = "none";
    return out;
  }
  out.value = num / den;
  if (counts.weighted && !counts.strata.empty()) {
    const Interval ci = bootstrap_interval(metric, counts, options, *out.value);
    out.ci_low = ci.low;
    out.ci_high = ci.high;
    out.interval_method = "bootstrap_percentile";
  } else {
    // Hand-built weighted counts without strata fall back to Wilson on the
    // weighted tallies.
    const Interval ci = wilson_interval(num, den, options.ci_level);
    out.ci_low = ci.low;
    out.ci_high = ci.high;
    out.interval_method = "wilson";
  }
  return out;
}

MetricEstimate recall(const ConfusionCounts& counts, const IntervalOptions& options) {
  return estimate(Metric::kRecall, counts, options);
}
MetricEstimate precision(const ConfusionCounts& counts, const IntervalOptions& options) {
  return estimate(Metric::kPrecision, counts, options);
}
MetricEstimate specificity(const ConfusionCounts& counts, const IntervalOptions& options) {
  return estimate(Metric::kSpecificity, counts, options);
}
MetricEstimate npv(const ConfusionCounts& counts, const IntervalOptions& options) {
  return estimate(Metric::kNpv, counts, options);
}

std::optional<double> f_beta(double precision, double recall, double beta) {
  if (!(precision >= 0.0 && precision <= 1.0)) {
    throw InputError("f_beta: precision must be in [0, 1], got " + format_real(precision));
  }
  if (!(recall >= 0.0 && recall <= 1.0)) {
    throw InputError("f_beta: recall must be in [0, 1], got " + format_real(recall));
  }
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw InputError("f_beta: beta must be positive, got " + format_real(beta));
  }
  if (precision == 0.0 && recall == 0.0) return std::nullopt;
  if (precision == 0.0 || recall == 0.0) return 0.0;
  const double b2 = beta * beta;
  return (1.0 + b2) * precision * recall / (b2 * precision + recall);
}

std::optional<double> bayes_adjusted_precision(double sensitivity, double specificity,
                                               double prevalence) {
  auto check = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw InputError(std::string("bayes_adjusted_precision: ") + name + " must be in [0, 1], got " +
                       format_real(v));
    }
  };
  check(sensitivity, "sensitivity");
  check(specificity, "specificity");
  check(prevalence, "prevalence");
  const double true_flags = sensitivity * prevalence;
  const double false_flags = (1.0 - specificity) * (1.0 - prevalence);
  const double den = true_flags + false_flags;
  if (!(den > 0.0)) return std::nullopt;
  return true_flags / den;
}

PrecisionAtK precision_at_k(const Dataset& dataset, std::size_t k, double ci_level) {
  std::vector<const EvaluationCase*> ranked;
  for (const EvaluationCase& c : dataset.cases()) {
    if (c.reference == ReferenceLabel::kExcluded) continue;
    if (!c.score) throw InputError("precision_at_k: case_id '" + c.case_id + "' has no score");
    ranked.push_back(&c);
  }
  if (k == 0 || k > ranked.size()) {
    throw InputError("precision_at_k: k must be in [1, " + std::to_string(ranked.size()) +
                     "], got " + std::to_string(k));
  }
  std::sort(ranked.begin(), ranked.end(), [](const EvaluationCase* a, const EvaluationCase* b) {
    if (*a->score != *b->score) return *a->score > *b->score;
    return a->case_id < b->case_id;
  });
  PrecisionAtK out;
  out.k = k;
  out.cutoff_score = *ranked[k - 1]->score;
  out.ties_straddle_cut = k < ranked.size() && *ranked[k]->score == out.cutoff_score;
  double hits = 0.0, labeled = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    switch (ranked[i]->reference) {
      case ReferenceLabel::kPositive:
        hits += 1.0;
        labeled += 1.0;
        break;
      case ReferenceLabel::kNegative:
        labeled += 1.0;
        break;
      default:
        ++out.ambiguous_in_top_k;
    }
  }
  MetricEstimate& e = out.estimate;
  e.metric = "precision_at_" + std::to_string(k);
  e.ci_level = ci_level;
  e.n_effective = labeled;
  if (labeled > 0.0) {
    e.value = hits / labeled;
    const Interval ci = wilson_interval(hits, labeled, ci_level);
    e.ci_low = ci.low;
    e.ci_high = ci.high;
    e.interval_method = "wilson";
  } else {
    e.interval_method = "none";
  }
  return out;
}

Concordance concordance_and_override(const Dataset& dataset,
                                     const std::map<std::string, bool>& human_labels) {
  if (human_labels.empty()) throw InputError("concordance: no human labels given");
  std::size_t agree = 0;
  for (const auto& [case_id, decision] : human_labels) {
    const EvaluationCase* c = dataset.find(case_id);
    if (!c) throw InputError("concordance: human label for unknown case_id '" + case_id + "'");
    if (!c->predicted) {
      throw InputError("concordance: case_id '" + case_id + "' has no model prediction");
    }
    if (*c->predicted == decision) ++agree;
  }
  Concordance out;
  out.n = human_labels.size();
  out.concordance = static_cast<double>(agree) / static_cast<double>(out.n);
  out.override_rate = static_cast<double>(out.n - agree) / static_cast<double>(out.n);
  return out;
}

}  // namespace rareval
