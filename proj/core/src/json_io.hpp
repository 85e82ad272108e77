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

#pragma once

// JSON conversions shared by the report and robustness code. Internal: the
// installed headers do not expose the JSON library.

#include <cmath>
#include <optional>

#include <json.hpp>

#include "rareval/curves.hpp"
#include "rareval/metrics.hpp"

namespace rareval::detail {

using json = nlohmann::ordered_json;

template <typename T>
json optional_json(const std::optional<T>& value) {
  return value ? json(*value) : json(nullptr);
}

// Non-finite reals have no JSON form; +inf thresholds are written as null.
inline json real_json(double value) { return std::isfinite(value) ? json(value) : json(nullptr); }

inline json to_json(const MetricEstimate& e) {
  return json{{"metric", e.metric},
              {"value", optional_json(e.value)},
              {"ci_low", optional_json(e.ci_low)},
              {"ci_high", optional_json(e.ci_high)},
              {"ci_level", e.ci_level},
              {"n_effective", e.n_effective},
              {"weighted", e.weighted},
              {"interval_method", e.interval_method}};
}

inline json to_json(const ConfusionCounts& c) {
  return json{{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"tn", c.tn}, {"weighted", c.weighted}};
}

inline json to_json(const CurvePoint& p) {
  return json{{"threshold", real_json(p.threshold)},
              {"recall", p.recall},
              {"precision", optional_json(p.precision)},
              {"specificity", p.specificity},
              {"fpr", p.fpr},
              {"predicted_positive_count", p.predicted_positive_count}};
}

inline json to_json(const Warning& w) {
  return json{{"code", w.code}, {"message", w.message}, {"observed", w.observed}, {"limit", w.limit}};
}

}  // namespace rareval::detail
