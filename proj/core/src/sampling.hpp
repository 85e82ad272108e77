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

// Resampling helpers shared by the metrics, robustness and SCLE code.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "rareval/common.hpp"

namespace rareval::detail {

// Linear-interpolation percentile of an ascending vector.
inline double percentile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

// n draws with replacement from a population with the given cell sizes,
// by sequential conditional binomials.
inline std::vector<std::uint64_t> multinomial(Engine& engine, std::uint64_t n,
                                              const std::vector<std::uint64_t>& cells) {
  std::vector<std::uint64_t> out(cells.size(), 0);
  if (cells.empty()) return out;
  std::uint64_t remaining_n = n;
  std::uint64_t remaining_mass = 0;
  for (std::uint64_t c : cells) remaining_mass += c;
  for (std::size_t i = 0; i + 1 < cells.size() && remaining_n > 0; ++i) {
    if (cells[i] == 0) continue;
    if (cells[i] >= remaining_mass) {
      out[i] = remaining_n;
      remaining_n = 0;
      break;
    }
    const double p = static_cast<double>(cells[i]) / static_cast<double>(remaining_mass);
    std::binomial_distribution<std::uint64_t> draw(remaining_n, p);
    out[i] = draw(engine);
    remaining_n -= out[i];
    remaining_mass -= cells[i];
  }
  out.back() += remaining_n;
  return out;
}

inline std::array<std::uint64_t, 4> multinomial4(Engine& engine, std::uint64_t n,
                                                 const std::array<std::uint64_t, 4>& cells) {
  const auto v = multinomial(engine, n, {cells.begin(), cells.end()});
  return {v[0], v[1], v[2], v[3]};
}

}  // namespace rareval::detail
