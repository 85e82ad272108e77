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

#include "rareval/datamodel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "rareval/common.hpp"
#include "rareval/csv.hpp"

namespace rareval {
namespace {

using nlohmann::json;

constexpr std::string_view kSubgroupPrefix = "sg_";
constexpr std::string_view kRunPrefix = "run_";

std::string row_ref(std::size_t row, std::string_view case_id) {
  std::string out = "row " + std::to_string(row);
  if (!case_id.empty()) out += " (case_id '" + std::string(case_id) + "')";
  return out;
}

std::string row_field(std::size_t row, std::string_view field) {
  return "row " + std::to_string(row) + ", field '" + std::string(field) + "'";
}

std::optional<bool> parse_binary(std::string_view text) {
  const std::string v = to_lower(text);
  if (v == "1" || v == "true" || v == "positive" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "negative" || v == "no") return false;
  return std::nullopt;
}

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

std::optional<bool> json_binary(const json& value, std::size_t row, std::string_view field) {
  if (value.is_null()) return std::nullopt;
  if (value.is_boolean()) return value.get<bool>();
  if (value.is_number_integer() || value.is_number_unsigned()) {
    const auto v = value.get<long long>();
    if (v == 0 || v == 1) return v == 1;
  }
  if (value.is_string()) {
    if (auto b = parse_binary(value.get<std::string>())) return b;
  }
  throw InputError(row_field(row, field) + ": expected a binary label, got " + value.dump());
}

}  // namespace

std::string_view to_string(ReferenceLabel label) {
  switch (label) {
    case ReferenceLabel::kPositive:
      return "positive";
    case ReferenceLabel::kNegative:
      return "negative";
    case ReferenceLabel::kAmbiguous:
      return "ambiguous";
    case ReferenceLabel::kExcluded:
      return "excluded";
  }
  return "unknown";
}

ReferenceLabel parse_reference_label(std::string_view text) {
  const std::string v = to_lower(text);
  if (v == "positive") return ReferenceLabel::kPositive;
  if (v == "negative") return ReferenceLabel::kNegative;
  if (v == "ambiguous") return ReferenceLabel::kAmbiguous;
  if (v == "excluded") return ReferenceLabel::kExcluded;
  throw InputError("unknown reference label '" + std::string(text) +
                   "' (expected positive, negative, ambiguous or excluded)");
}

Dataset::Dataset(std::vector<EvaluationCase> cases, std::vector<StratumSpec> design,
                 Metadata metadata) {
  auto state = std::make_shared<State>();

  std::set<std::string> stratum_ids;
  for (const StratumSpec& s : design) {
    if (s.stratum_id.empty()) throw InputError("design: empty stratum_id");
    if (!(s.inclusion_probability > 0.0 && s.inclusion_probability <= 1.0)) {
      throw InputError("design: stratum '" + s.stratum_id +
                       "' has inclusion_probability " + format_real(s.inclusion_probability) +
                       " outside (0, 1]");
    }
    if (!stratum_ids.insert(s.stratum_id).second) {
      throw InputError("design: duplicate stratum_id '" + s.stratum_id + "'");
    }
  }

  std::size_t with_stratum = 0;
  state->index.reserve(cases.size());
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const EvaluationCase& c = cases[i];
    const std::size_t row = i + 1;
    if (c.case_id.empty()) throw InputError(row_field(row, "case_id") + ": empty case_id");
    auto [it, inserted] = state->index.emplace(c.case_id, i);
    if (!inserted) {
      throw InputError("duplicate case_id '" + c.case_id + "' at rows " +
                       std::to_string(it->second + 1) + " and " + std::to_string(row));
    }
    if (!c.score && !c.predicted) {
      throw InputError(row_ref(row, c.case_id) + ": neither score nor predicted is present");
    }
    if (c.score && !std::isfinite(*c.score)) {
      throw InputError(row_field(row, "score") + ": score must be finite");
    }
    if (c.stratum_id) {
      ++with_stratum;
      if (!stratum_ids.contains(*c.stratum_id)) {
        throw InputError(row_ref(row, c.case_id) + ": unknown stratum_id '" + *c.stratum_id +
                         "'");
      }
    }
  }
  if (with_stratum != 0 && with_stratum != cases.size()) {
    for (std::size_t i = 0; i < cases.size(); ++i) {
      if (!cases[i].stratum_id) {
        throw InputError(row_ref(i + 1, cases[i].case_id) +
                         ": missing stratum_id in a stratified dataset (mixed designs are "
                         "rejected)");
      }
    }
  }
  if (!design.empty() && with_stratum == 0 && !cases.empty()) {
    throw InputError("design declares strata but no case carries a stratum_id");
  }

  state->cases = std::move(cases);
  state->design = std::move(design);
  state->metadata = std::move(metadata);
  state_ = std::move(state);
}

const StratumSpec& Dataset::stratum(std::string_view stratum_id) const {
  for (const StratumSpec& s : state_->design) {
    if (s.stratum_id == stratum_id) return s;
  }
  throw InputError("unknown stratum_id '" + std::string(stratum_id) + "'");
}

double Dataset::weight(const EvaluationCase& c) const {
  if (!has_design() || !c.stratum_id) return 1.0;
  return 1.0 / stratum(*c.stratum_id).inclusion_probability;
}

const EvaluationCase* Dataset::find(std::string_view case_id) const {
  auto it = state_->index.find(std::string(case_id));
  return it == state_->index.end() ? nullptr : &state_->cases[it->second];
}

bool Dataset::operator==(const Dataset& other) const {
  return state_->cases == other.state_->cases && state_->design == other.state_->design &&
         state_->metadata == other.state_->metadata;
}

LabelCounts count_labels(const Dataset& dataset) {
  LabelCounts counts;
  for (const EvaluationCase& c : dataset.cases()) {
    switch (c.reference) {
      case ReferenceLabel::kPositive:
        ++counts.positive;
        break;
      case ReferenceLabel::kNegative:
        ++counts.negative;
        break;
      case ReferenceLabel::kAmbiguous:
        ++counts.ambiguous;
        break;
      case ReferenceLabel::kExcluded:
        ++counts.excluded;
        break;
    }
  }
  return counts;
}

std::string_view to_string(Format format) {
  return format == Format::kCsv ? "csv" : "jsonl";
}

Format parse_format(std::string_view text) {
  const std::string v = to_lower(text);
  if (v == "csv") return Format::kCsv;
  if (v == "jsonl" || v == "ndjson") return Format::kJsonl;
  throw InputError("unknown dataset format '" + std::string(text) + "' (expected csv or jsonl)");
}

Format format_from_path(const std::filesystem::path& path) {
  const std::string ext = to_lower(path.extension().string());
  if (ext == ".csv") return Format::kCsv;
  if (ext == ".jsonl" || ext == ".ndjson") return Format::kJsonl;
  throw InputError("cannot infer dataset format from '" + path.string() +
                   "'; pass the format explicitly");
}

Dataset parse_csv(std::istream& in, std::vector<StratumSpec> design, Metadata metadata) {
  const std::vector<csv::Record> records = csv::read(in);
  if (records.empty()) throw InputError("CSV: missing header row");
  const std::vector<std::string>& header = records.front().fields;

  enum class Column { kCaseId, kReference, kScore, kPredicted, kBenchmark, kStratum, kSubgroup, kRun };
  struct Binding {
    Column column;
    std::string name;
  };
  std::vector<Binding> bindings;
  std::set<std::string> seen;
  for (const std::string& raw : header) {
    const std::string name = to_lower(raw);
    if (!seen.insert(name).second) throw InputError("CSV header: duplicate column '" + raw + "'");
    if (name == "case_id") {
      bindings.push_back({Column::kCaseId, name});
    } else if (name == "reference") {
      bindings.push_back({Column::kReference, name});
    } else if (name == "score") {
      bindings.push_back({Column::kScore, name});
    } else if (name == "predicted") {
      bindings.push_back({Column::kPredicted, name});
    } else if (name == "benchmark_predicted") {
      bindings.push_back({Column::kBenchmark, name});
    } else if (name == "stratum_id") {
      bindings.push_back({Column::kStratum, name});
    } else if (starts_with(raw, kSubgroupPrefix) && raw.size() > kSubgroupPrefix.size()) {
      bindings.push_back({Column::kSubgroup, raw.substr(kSubgroupPrefix.size())});
    } else if (starts_with(name, kRunPrefix) && raw.size() > kRunPrefix.size()) {
      bindings.push_back({Column::kRun, raw});
    } else {
      throw InputError("CSV header: unknown column '" + raw + "'");
    }
  }
  if (!seen.contains("case_id")) throw InputError("CSV header: missing required column 'case_id'");
  if (!seen.contains("reference")) throw InputError("CSV header: missing required column 'reference'");
  if (!seen.contains("score") && !seen.contains("predicted")) {
    throw InputError("CSV header: need at least one of 'score' or 'predicted'");
  }

  std::vector<EvaluationCase> cases;
  cases.reserve(records.size() - 1);
  for (std::size_t r = 1; r < records.size(); ++r) {
    const csv::Record& rec = records[r];
    const std::size_t row = r;
    if (rec.fields.size() != bindings.size()) {
      throw InputError("row " + std::to_string(row) + " (line " + std::to_string(rec.line) +
                       "): expected " + std::to_string(bindings.size()) + " fields, got " +
                       std::to_string(rec.fields.size()));
    }
    EvaluationCase c;
    for (std::size_t f = 0; f < bindings.size(); ++f) {
      const std::string& value = rec.fields[f];
      const Binding& b = bindings[f];
      switch (b.column) {
        case Column::kCaseId:
          c.case_id = value;
          break;
        case Column::kReference:
          try {
            c.reference = parse_reference_label(value);
          } catch (const InputError& e) {
            throw InputError(row_field(row, "reference") + ": " + e.what());
          }
          break;
        case Column::kScore:
          if (!value.empty()) {
            c.score = parse_real(value);
            if (!c.score) throw InputError(row_field(row, "score") + ": not a number: '" + value + "'");
          }
          break;
        case Column::kPredicted:
        case Column::kBenchmark: {
          if (value.empty()) break;
          auto label = parse_binary(value);
          if (!label) {
            throw InputError(row_field(row, b.name) + ": expected a binary label, got '" + value + "'");
          }
          (b.column == Column::kPredicted ? c.predicted : c.benchmark_predicted) = label;
          break;
        }
        case Column::kStratum:
          if (!value.empty()) c.stratum_id = value;
          break;
        case Column::kSubgroup:
          if (!value.empty()) c.subgroups[b.name] = value;
          break;
        case Column::kRun:
          if (!value.empty()) {
            auto label = parse_binary(value);
            if (!label) {
              throw InputError(row_field(row, b.name) + ": expected a binary label, got '" + value + "'");
            }
            c.repeated_labels.push_back(*label);
          }
          break;
      }
    }
    cases.push_back(std::move(c));
  }
  return Dataset(std::move(cases), std::move(design), std::move(metadata));
}

Dataset parse_jsonl(std::istream& in, std::vector<StratumSpec> design, Metadata metadata) {
  static const std::set<std::string> kKnownKeys = {
      "case_id",     "reference", "score",     "predicted",      "benchmark_predicted",
      "stratum_id",  "subgroups", "repeated_labels"};
  std::vector<EvaluationCase> cases;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const std::size_t row = cases.size() + 1;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw InputError("row " + std::to_string(row) + " (line " + std::to_string(line_no) +
                       "): malformed JSON: " + e.what());
    }
    if (!obj.is_object()) throw InputError("row " + std::to_string(row) + ": expected a JSON object");
    if (obj.contains("kind") && obj["kind"] == "synth_truth_sidecar") {
      throw InputError("row " + std::to_string(row) +
                       ": this is a synthetic truth sidecar, which is not ingestible");
    }
    for (const auto& [key, _] : obj.items()) {
      if (!kKnownKeys.contains(key)) throw InputError(row_field(row, key) + ": unknown key");
    }
    EvaluationCase c;
    if (!obj.contains("case_id") || !obj["case_id"].is_string()) {
      throw InputError(row_field(row, "case_id") + ": missing or not a string");
    }
    c.case_id = obj["case_id"].get<std::string>();
    if (!obj.contains("reference") || !obj["reference"].is_string()) {
      throw InputError(row_field(row, "reference") + ": missing or not a string");
    }
    try {
      c.reference = parse_reference_label(obj["reference"].get<std::string>());
    } catch (const InputError& e) {
      throw InputError(row_field(row, "reference") + ": " + e.what());
    }
    if (obj.contains("score") && !obj["score"].is_null()) {
      if (!obj["score"].is_number()) throw InputError(row_field(row, "score") + ": not a number");
      c.score = obj["score"].get<double>();
    }
    if (obj.contains("predicted")) c.predicted = json_binary(obj["predicted"], row, "predicted");
    if (obj.contains("benchmark_predicted")) {
      c.benchmark_predicted = json_binary(obj["benchmark_predicted"], row, "benchmark_predicted");
    }
    if (obj.contains("stratum_id") && !obj["stratum_id"].is_null()) {
      if (!obj["stratum_id"].is_string()) throw InputError(row_field(row, "stratum_id") + ": not a string");
      c.stratum_id = obj["stratum_id"].get<std::string>();
    }
    if (obj.contains("subgroups") && !obj["subgroups"].is_null()) {
      if (!obj["subgroups"].is_object()) throw InputError(row_field(row, "subgroups") + ": not an object");
      for (const auto& [k, v] : obj["subgroups"].items()) {
        if (!v.is_string()) throw InputError(row_field(row, "subgroups." + k) + ": not a string");
        c.subgroups[k] = v.get<std::string>();
      }
    }
    if (obj.contains("repeated_labels") && !obj["repeated_labels"].is_null()) {
      const json& runs = obj["repeated_labels"];
      if (!runs.is_array() || runs.empty()) {
        throw InputError(row_field(row, "repeated_labels") + ": must be a non-empty array");
      }
      for (const json& v : runs) {
        c.repeated_labels.push_back(*json_binary(v, row, "repeated_labels"));
      }
    }
    cases.push_back(std::move(c));
  }
  return Dataset(std::move(cases), std::move(design), std::move(metadata));
}

std::filesystem::path design_sidecar_path(const std::filesystem::path& data_path) {
  return std::filesystem::path(data_path.string() + ".design.json");
}

DesignFile read_design(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open design file '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError("design file '" + path.string() + "': " + e.what());
  }
  DesignFile design;
  if (doc.contains("strata")) {
    for (const json& s : doc["strata"]) {
      if (!s.contains("stratum_id") || !s.contains("inclusion_probability")) {
        throw InputError("design file: each stratum needs stratum_id and inclusion_probability");
      }
      design.strata.push_back({s["stratum_id"].get<std::string>(),
                               s["inclusion_probability"].get<double>(),
                               s.value("description", std::string{})});
    }
  }
  if (doc.contains("metadata")) {
    for (const auto& [k, v] : doc["metadata"].items()) {
      design.metadata[k] = v.is_string() ? v.get<std::string>() : v.dump();
    }
  }
  return design;
}

void write_design(const std::filesystem::path& path, const DesignFile& design) {
  nlohmann::ordered_json doc;
  doc["strata"] = nlohmann::ordered_json::array();
  for (const StratumSpec& s : design.strata) {
    doc["strata"].push_back({{"stratum_id", s.stratum_id},
                             {"inclusion_probability", s.inclusion_probability},
                             {"description", s.description}});
  }
  doc["metadata"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : design.metadata) doc["metadata"][k] = v;
  std::ofstream out(path);
  if (!out) throw InputError("cannot write design file '" + path.string() + "'");
  out << doc.dump(2) << '\n';
}

Dataset ingest(const std::filesystem::path& path, Format format,
               const std::optional<std::filesystem::path>& design_path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open dataset '" + path.string() + "'");
  DesignFile design;
  if (design_path) {
    design = read_design(*design_path);
  } else if (std::filesystem::exists(design_sidecar_path(path))) {
    design = read_design(design_sidecar_path(path));
  }
  try {
    return format == Format::kCsv
               ? parse_csv(in, std::move(design.strata), std::move(design.metadata))
               : parse_jsonl(in, std::move(design.strata), std::move(design.metadata));
  } catch (const InputError& e) {
    throw InputError(path.filename().string() + ": " + e.what());
  }
}

void emit_csv(const Dataset& dataset, std::ostream& out) {
  std::set<std::string> subgroup_names;
  std::size_t max_runs = 0;
  for (const EvaluationCase& c : dataset.cases()) {
    for (const auto& [k, _] : c.subgroups) subgroup_names.insert(k);
    max_runs = std::max(max_runs, c.repeated_labels.size());
  }
  std::vector<std::string> header = {"case_id",   "reference",           "score",
                                     "predicted", "benchmark_predicted", "stratum_id"};
  for (const std::string& name : subgroup_names) header.push_back(std::string(kSubgroupPrefix) + name);
  for (std::size_t r = 0; r < max_runs; ++r) header.push_back(std::string(kRunPrefix) + std::to_string(r + 1));
  csv::write_row(out, header);

  auto bit = [](const std::optional<bool>& b) { return b ? std::string(*b ? "1" : "0") : std::string(); };
  std::vector<std::string> row;
  for (const EvaluationCase& c : dataset.cases()) {
    row.clear();
    row.push_back(c.case_id);
    row.emplace_back(to_string(c.reference));
    row.push_back(c.score ? format_real(*c.score) : std::string());
    row.push_back(bit(c.predicted));
    row.push_back(bit(c.benchmark_predicted));
    row.push_back(c.stratum_id.value_or(""));
    for (const std::string& name : subgroup_names) {
      auto it = c.subgroups.find(name);
      row.push_back(it == c.subgroups.end() ? std::string() : it->second);
    }
    for (std::size_t r = 0; r < max_runs; ++r) {
      row.push_back(r < c.repeated_labels.size() ? (c.repeated_labels[r] ? "1" : "0") : "");
    }
    csv::write_row(out, row);
  }
}

void emit_jsonl(const Dataset& dataset, std::ostream& out) {
  for (const EvaluationCase& c : dataset.cases()) {
    nlohmann::ordered_json obj;
    obj["case_id"] = c.case_id;
    obj["reference"] = to_string(c.reference);
    if (c.score) obj["score"] = *c.score;
    if (c.predicted) obj["predicted"] = *c.predicted;
    if (c.benchmark_predicted) obj["benchmark_predicted"] = *c.benchmark_predicted;
    if (c.stratum_id) obj["stratum_id"] = *c.stratum_id;
    if (!c.subgroups.empty()) obj["subgroups"] = c.subgroups;
    if (!c.repeated_labels.empty()) {
      auto runs = nlohmann::ordered_json::array();
      for (bool b : c.repeated_labels) runs.push_back(b);
      obj["repeated_labels"] = runs;
    }
    out << obj.dump() << '\n';
  }
}

void emit(const Dataset& dataset, const std::filesystem::path& path, Format format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write dataset '" + path.string() + "'");
  if (format == Format::kCsv) {
    emit_csv(dataset, out);
  } else {
    emit_jsonl(dataset, out);
  }
  const auto sidecar = design_sidecar_path(path);
  if (dataset.has_design() || !dataset.metadata().empty()) {
    write_design(sidecar, DesignFile{{dataset.design().begin(), dataset.design().end()},
                                     dataset.metadata()});
  } else if (std::filesystem::exists(sidecar)) {
    std::filesystem::remove(sidecar);
  }
}

Dataset apply_threshold(const Dataset& dataset, double threshold) {
  std::vector<EvaluationCase> cases(dataset.cases().begin(), dataset.cases().end());
  for (EvaluationCase& c : cases) {
    if (!c.score) {
      throw InputError("apply_threshold: case_id '" + c.case_id + "' has no score");
    }
    c.predicted = *c.score >= threshold;
  }
  return Dataset(std::move(cases), {dataset.design().begin(), dataset.design().end()},
                 dataset.metadata());
}

}  // namespace rareval
