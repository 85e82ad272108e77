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

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "rareval/datamodel.hpp"

namespace rareval::testing {

inline EvaluationCase make_case(std::string id, ReferenceLabel ref, std::optional<double> score,
                                std::optional<bool> predicted = std::nullopt) {
  EvaluationCase c;
  c.case_id = std::move(id);
  c.reference = ref;
  c.score = score;
  c.predicted = predicted;
  return c;
}

inline EvaluationCase labeled(std::string id, bool positive, bool predicted) {
  return make_case(std::move(id), positive ? ReferenceLabel::kPositive : ReferenceLabel::kNegative,
                   std::nullopt, predicted);
}

// Cases reproducing the given confusion counts, ids c0001...
inline std::vector<EvaluationCase> cases_from_counts(int tp, int fp, int fn, int tn) {
  std::vector<EvaluationCase> out;
  int i = 0;
  auto add = [&](int count, bool positive, bool predicted) {
    for (int j = 0; j < count; ++j) {
      char id[16];
      std::snprintf(id, sizeof id, "c%05d", ++i);
      out.push_back(labeled(id, positive, predicted));
    }
  };
  add(tp, true, true);
  add(fp, false, true);
  add(fn, true, false);
  add(tn, false, false);
  return out;
}

}  // namespace rareval::testing
