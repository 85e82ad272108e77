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

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rareval {

// Error categories map one-to-one onto CLI exit codes.
enum class ErrorKind {
  kInput = 2,
  kInfeasible = 3,
  kInvariant = 4,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

class InputError : public Error {
 public:
  explicit InputError(const std::string& message)
      : Error(ErrorKind::kInput, message) {}
};

class InfeasibleError : public Error {
 public:
  explicit InfeasibleError(const std::string& message)
      : Error(ErrorKind::kInfeasible, message) {}
};

class InvariantError : public Error {
 public:
  explicit InvariantError(const std::string& message)
      : Error(ErrorKind::kInvariant, message) {}
};

// Shortest decimal representation that parses back to the same double.
std::string format_real(double value);

// Strict parse of a full string as a finite or infinite double.
std::optional<double> parse_real(std::string_view text);

std::string to_lower(std::string_view text);

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t value);

// Counter-based seeding. A replicate's stream depends only on
// (seed, index), so results do not depend on scheduling order.
using Engine = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag);
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index);
Engine make_engine(std::uint64_t seed, std::uint64_t index = 0);

// Portable draws (independent of the standard library's distributions).
double uniform01(Engine& engine);
std::uint64_t uniform_index(Engine& engine, std::uint64_t n);

}  // namespace rareval
