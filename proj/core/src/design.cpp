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

#include "rareval/design.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <boost/math/distributions/hypergeometric.hpp>

#include "rareval/common.hpp"

namespace rareval {
namespace {

constexpr double kTolerance = 1e-12;

void require_open_unit(double v, const char* name) {
  if (!(v > 0.0 && v < 1.0)) {
    throw InputError(std::string(name) + " must be in (0, 1), got " + format_real(v));
  }
}

std::uint64_t binomial(Engine& engine, std::uint64_t n, double p) {
  if (n == 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;
  std::binomial_distribution<std::uint64_t> draw(n, p);
  return draw(engine);
}

}  // namespace

FlagCellModel derive_cell_model(const PrecisionStudyAssumptions& a) {
  if (a.sample_size == 0) throw InputError("sample_size must be positive");
  if (a.flag_rate_a <= 0.0 || a.flag_rate_b <= 0.0) {
    throw InputError("flag rates must be positive (a model that never flags has no precision)");
  }
  require_open_unit(a.flag_rate_a, "flag_rate_a");
  require_open_unit(a.flag_rate_b, "flag_rate_b");
  require_open_unit(a.precision_a, "precision_a");
  require_open_unit(a.precision_b, "precision_b");
  require_open_unit(a.alpha, "alpha");
  if (!(a.overlap_rate >= 0.0 && a.overlap_rate <= 1.0)) {
    throw InputError("overlap_rate must be in [0, 1], got " + format_real(a.overlap_rate));
  }
  if (a.n_replicates == 0) throw InputError("n_replicates must be positive");

  const double small = std::min(a.flag_rate_a, a.flag_rate_b);
  const double large = std::max(a.flag_rate_a, a.flag_rate_b);
  if (a.overlap_rate > small / large + kTolerance) {
    throw InputError("overlap_rate " + format_real(a.overlap_rate) +
                     " exceeds min(flag rates)/max(flag rates) = " + format_real(small / large));
  }

  FlagCellModel m;
  m.p_both = std::min(a.overlap_rate * large, small);
  m.p_a_only = std::max(0.0, a.flag_rate_a - m.p_both);
  m.p_b_only = std::max(0.0, a.flag_rate_b - m.p_both);
  if (m.p_both + m.p_a_only + m.p_b_only > 1.0 + kTolerance) {
    throw InfeasibleError("flag rates imply more than one flag per case");
  }

  const double tp_a = a.precision_a * a.flag_rate_a;
  const double tp_b = a.precision_b * a.flag_rate_b;
  m.q_shared = (tp_a + tp_b) / (a.flag_rate_a + a.flag_rate_b);

  auto solve = [&](double tp, double p_only, double precision, const char* model) {
    const double rest = tp - m.p_both * m.q_shared;
    if (p_only <= kTolerance) {
      if (std::abs(rest) > 1e-9) {
        throw InfeasibleError(std::string("model ") + model +
                              " has no disagreement flags, so its precision must equal the "
                              "shared-flag precision " + format_real(m.q_shared));
      }
      return precision;
    }
    const double q = rest / p_only;
    if (q < -1e-9 || q > 1.0 + 1e-9) {
      throw InfeasibleError(std::string("no cell model reproduces precision_") + model + " = " +
                            format_real(precision) + " with overlap_rate " +
                            format_real(a.overlap_rate) + ": its disagreement flags would need a "
                            "positive rate of " + format_real(q) + "; lower the overlap");
    }
    return std::clamp(q, 0.0, 1.0);
  };
  m.q_a_only = solve(tp_a, m.p_a_only, a.precision_a, "a");
  m.q_b_only = solve(tp_b, m.p_b_only, a.precision_b, "b");
  return m;
}

CombinedFlagsMode parse_combined_flags_mode(std::string_view text) {
  const std::string v = to_lower(text);
  if (v == "union") return CombinedFlagsMode::kUnion;
  if (v == "sum") return CombinedFlagsMode::kSum;
  throw InputError("combined flags mode must be 'union' or 'sum', got '" + std::string(text) + "'");
}

double flag_rate_from_combined(double combined_flags, std::uint64_t sample_size,
                               double overlap_rate, CombinedFlagsMode mode) {
  if (sample_size == 0) throw InputError("sample_size must be positive");
  if (!(combined_flags > 0.0)) throw InputError("combined flag count must be positive");
  if (!(overlap_rate >= 0.0 && overlap_rate <= 1.0)) {
    throw InputError("overlap_rate must be in [0, 1]");
  }
  const double n = static_cast<double>(sample_size);
  // With equal rates f: |A u B| = f (2 - overlap) n and |A| + |B| = 2 f n.
  return mode == CombinedFlagsMode::kUnion ? combined_flags / ((2.0 - overlap_rate) * n)
                                           : combined_flags / (2.0 * n);
}

double disagreement_test_p_value(std::uint64_t a_only_flags, std::uint64_t a_only_positive,
                                 std::uint64_t b_only_flags, std::uint64_t b_only_positive) {
  if (a_only_positive > a_only_flags || b_only_positive > b_only_flags) {
    throw InputError("positives cannot exceed flags");
  }
  const std::uint64_t total = a_only_flags + b_only_flags;
  const std::uint64_t positives = a_only_positive + b_only_positive;
  if (a_only_flags == 0 || b_only_flags == 0 || positives == 0 || positives == total) return 1.0;

  using boost::math::hypergeometric_distribution;
  const hypergeometric_distribution<double> null_law(positives, a_only_flags, total);
  const std::uint64_t lo = a_only_flags + positives > total ? a_only_flags + positives - total : 0;
  const std::uint64_t x = a_only_positive;
  const double at = boost::math::pdf(null_law, x);
  const double below = x > lo ? boost::math::cdf(null_law, x - 1) : 0.0;
  const double above = boost::math::cdf(boost::math::complement(null_law, x));
  const double lower_mid = below + 0.5 * at;
  const double upper_mid = above + 0.5 * at;
  return std::min(1.0, 2.0 * std::min(lower_mid, upper_mid));
}

PowerResult simulate_precision_power(const PrecisionStudyAssumptions& a) {
  const FlagCellModel m = derive_cell_model(a);
  const double p_a_given_rest = m.p_a_only / (1.0 - m.p_both);
  const double rest_after_a = 1.0 - m.p_both - m.p_a_only;
  const double p_b_given_rest = rest_after_a > 0.0 ? std::min(1.0, m.p_b_only / rest_after_a) : 0.0;

  const std::uint64_t stream = derive_seed(a.seed, "design.power");
  std::uint64_t rejections = 0;
  for (std::uint64_t r = 0; r < a.n_replicates; ++r) {
    Engine engine = make_engine(stream, r);
    const std::uint64_t n_both = binomial(engine, a.sample_size, m.p_both);
    const std::uint64_t n_a = binomial(engine, a.sample_size - n_both, p_a_given_rest);
    const std::uint64_t n_b = binomial(engine, a.sample_size - n_both - n_a, p_b_given_rest);
    const std::uint64_t pos_a = binomial(engine, n_a, m.q_a_only);
    const std::uint64_t pos_b = binomial(engine, n_b, m.q_b_only);
    if (disagreement_test_p_value(n_a, pos_a, n_b, pos_b) < a.alpha) ++rejections;
  }
  PowerResult out;
  out.n_replicates = a.n_replicates;
  out.seed = a.seed;
  out.power = static_cast<double>(rejections) / static_cast<double>(a.n_replicates);
  out.mc_stderr = std::sqrt(out.power * (1.0 - out.power) / static_cast<double>(a.n_replicates));
  return out;
}

SampleSizeResult solve_sample_size(const PrecisionStudyAssumptions& assumptions,
                                   double target_power, const SampleSizeOptions& options) {
  if (!(target_power > assumptions.alpha && target_power < 1.0)) {
    throw InputError("target_power must be in (alpha, 1), got " + format_real(target_power));
  }
  if (options.min_size == 0 || options.min_size > options.max_size) {
    throw InputError("sample-size search needs 0 < min_size <= max_size");
  }
  SampleSizeResult result;
  const std::uint64_t base = derive_seed(assumptions.seed, "design.sample_size");
  auto probe = [&](std::uint64_t n) {
    PrecisionStudyAssumptions a = assumptions;
    a.sample_size = n;
    a.seed = substream_seed(base, n);
    PowerResult p = simulate_precision_power(a);
    result.probes.emplace_back(n, p.power);
    return p;
  };

  std::uint64_t n = options.min_size;
  PowerResult at_n = probe(n);
  if (at_n.power >= target_power) {
    result.sample_size = n;
    result.power = at_n;
    return result;
  }
  std::uint64_t lo = n;
  for (;;) {
    if (n == options.max_size) {
      throw InfeasibleError("target power " + format_real(target_power) +
                            " not reached up to max sample size " + std::to_string(options.max_size) +
                            " (power there " + format_real(at_n.power) + ")");
    }
    n = std::min(n * 2, options.max_size);
    at_n = probe(n);
    if (at_n.power >= target_power) break;
    lo = n;
  }
  std::uint64_t hi = n;
  PowerResult at_hi = at_n;
  while (hi - lo > 1) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    PowerResult at_mid = probe(mid);
    if (at_mid.power >= target_power) {
      hi = mid;
      at_hi = at_mid;
    } else {
      lo = mid;
    }
  }
  result.sample_size = hi;
  result.power = at_hi;
  return result;
}

std::vector<std::size_t> walk_order(std::size_t universe_size, std::uint64_t seed) {
  std::vector<std::size_t> order(universe_size);
  for (std::size_t i = 0; i < universe_size; ++i) order[i] = i;
  Engine engine = make_engine(derive_seed(seed, "design.walk"));
  for (std::size_t i = universe_size; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(uniform_index(engine, i));
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

PairedPrecisionTest build_paired_precision_test(std::size_t universe_size,
                                                const std::function<bool(std::size_t)>& model_a_flags,
                                                const std::function<bool(std::size_t)>& model_b_flags,
                                                std::size_t target_flags, std::uint64_t seed) {
  if (target_flags == 0) throw InputError("target_flags must be positive");
  PairedPrecisionTest out;
  for (std::size_t idx : walk_order(universe_size, seed)) {
    if (out.sample_a.size() >= target_flags && out.sample_b.size() >= target_flags) break;
    ++out.cases_visited;
    const bool take_a = out.sample_a.size() < target_flags && model_a_flags(idx);
    const bool take_b = out.sample_b.size() < target_flags && model_b_flags(idx);
    if (take_a) out.sample_a.push_back(idx);
    if (take_b) out.sample_b.push_back(idx);
    if (take_a && take_b) out.shared.push_back(idx);
  }
  out.annotation_burden = out.sample_a.size() + out.sample_b.size() - out.shared.size();
  if (out.sample_a.size() < target_flags || out.sample_b.size() < target_flags) {
    out.exhausted = true;
    out.warning = "universe exhausted after " + std::to_string(out.cases_visited) +
                  " cases: model A collected " + std::to_string(out.sample_a.size()) + " of " +
                  std::to_string(target_flags) + ", model B collected " +
                  std::to_string(out.sample_b.size()) + " of " + std::to_string(target_flags);
  }
  return out;
}

PairedPrecisionTest build_paired_precision_test(const Dataset& universe, std::size_t target_flags,
                                                std::uint64_t seed) {
  const auto cases = universe.cases();
  for (const EvaluationCase& c : cases) {
    if (!c.predicted || !c.benchmark_predicted) {
      throw InputError("paired precision test: case_id '" + c.case_id +
                       "' needs both predicted and benchmark_predicted");
    }
  }
  return build_paired_precision_test(
      cases.size(), [&](std::size_t i) { return *cases[i].predicted; },
      [&](std::size_t i) { return *cases[i].benchmark_predicted; }, target_flags, seed);
}

PairPrevalence pair_prevalence(const PairPrevalenceSpec& spec) {
  if (spec.n_records < 2) throw InputError("pair_prevalence: n_records must be at least 2");
  if (!(spec.duplicate_fraction >= 0.0 && spec.duplicate_fraction <= 1.0)) {
    throw InputError("pair_prevalence: duplicate_fraction must be in [0, 1]");
  }
  const double n = static_cast<double>(spec.n_records);
  const double duplicated_records = spec.duplicate_fraction * n;
  PairPrevalence out;
  out.prevalence = duplicated_records / (n * n);
  const double whole = std::round(duplicated_records);
  if (std::abs(duplicated_records - whole) > 1e-6 * std::max(1.0, whole) ||
      std::fmod(whole, 2.0) != 0.0) {
    out.warning = "duplicate_fraction * n_records = " + format_real(duplicated_records) +
                  " is not an even whole number of records, so it does not split into "
                  "duplicate pairs";
  }
  return out;
}

}  // namespace rareval
