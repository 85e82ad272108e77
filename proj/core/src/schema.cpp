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

// Validator for the JSON-schema subset used by the report schema.
#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "rareval/common.hpp"
#include "rareval/report.hpp"

namespace rareval::report {
namespace {

using nlohmann::json;

class Validator {
 public:
  explicit Validator(const json& root) : root_(root) {}

  void check(const json& schema, const json& value, const std::string& path) {
    if (schema.is_boolean()) {
      if (!schema.get<bool>()) fail(path, "no value is allowed here");
      return;
    }
    if (auto ref = schema.find("$ref"); ref != schema.end()) {
      check(resolve(ref->get<std::string>()), value, path);
      return;
    }
    if (auto type = schema.find("type"); type != schema.end() && !type_matches(*type, value)) {
      fail(path, "expected type " + type->dump() + ", got " + type_name(value));
      return;
    }
    if (auto c = schema.find("const"); c != schema.end() && *c != value) {
      fail(path, "expected constant " + c->dump());
    }
    if (auto e = schema.find("enum"); e != schema.end()) {
      bool found = false;
      for (const json& option : *e) found = found || option == value;
      if (!found) fail(path, "value " + value.dump() + " is not one of " + e->dump());
    }
    if (value.is_number()) check_number(schema, value.get<double>(), path);
    if (value.is_string()) {
      if (auto m = schema.find("minLength"); m != schema.end() && value.get<std::string>().size() < m->get<std::size_t>()) {
        fail(path, "string shorter than " + m->dump());
      }
    }
    if (value.is_array()) check_array(schema, value, path);
    if (value.is_object()) check_object(schema, value, path);
  }

  std::vector<std::string> errors;

 private:
  const json& resolve(const std::string& ref) {
    if (ref.rfind("#/", 0) != 0) throw InputError("schema: only local $ref is supported, got '" + ref + "'");
    try {
      return root_.at(json::json_pointer(ref.substr(1)));
    } catch (const json::exception&) {
      throw InputError("schema: unresolved $ref '" + ref + "'");
    }
  }

  static std::string type_name(const json& v) {
    if (v.is_null()) return "null";
    if (v.is_boolean()) return "boolean";
    if (v.is_number_integer() || v.is_number_unsigned()) return "integer";
    if (v.is_number()) return "number";
    if (v.is_string()) return "string";
    if (v.is_array()) return "array";
    return "object";
  }

  static bool single_type_matches(const std::string& t, const json& v) {
    if (t == "null") return v.is_null();
    if (t == "boolean") return v.is_boolean();
    if (t == "number") return v.is_number();
    if (t == "integer") {
      if (v.is_number_integer() || v.is_number_unsigned()) return true;
      if (!v.is_number_float()) return false;
      const double d = v.get<double>();
      return std::isfinite(d) && d == std::floor(d);
    }
    if (t == "string") return v.is_string();
    if (t == "array") return v.is_array();
    if (t == "object") return v.is_object();
    throw InputError("schema: unknown type '" + t + "'");
  }

  static bool type_matches(const json& type, const json& v) {
    if (type.is_string()) return single_type_matches(type.get<std::string>(), v);
    for (const json& t : type) {
      if (single_type_matches(t.get<std::string>(), v)) return true;
    }
    return false;
  }

  void check_number(const json& schema, double v, const std::string& path) {
    if (auto m = schema.find("minimum"); m != schema.end() && v < m->get<double>()) {
      fail(path, "value below minimum " + m->dump());
    }
    if (auto m = schema.find("maximum"); m != schema.end() && v > m->get<double>()) {
      fail(path, "value above maximum " + m->dump());
    }
    if (auto m = schema.find("exclusiveMinimum"); m != schema.end() && v <= m->get<double>()) {
      fail(path, "value not above exclusive minimum " + m->dump());
    }
    if (auto m = schema.find("exclusiveMaximum"); m != schema.end() && v >= m->get<double>()) {
      fail(path, "value not below exclusive maximum " + m->dump());
    }
  }

  void check_array(const json& schema, const json& value, const std::string& path) {
    if (auto m = schema.find("minItems"); m != schema.end() && value.size() < m->get<std::size_t>()) {
      fail(path, "fewer than " + m->dump() + " items");
    }
    if (auto m = schema.find("maxItems"); m != schema.end() && value.size() > m->get<std::size_t>()) {
      fail(path, "more than " + m->dump() + " items");
    }
    if (auto items = schema.find("items"); items != schema.end()) {
      for (std::size_t i = 0; i < value.size(); ++i) check(*items, value[i], path + "/" + std::to_string(i));
    }
  }

  void check_object(const json& schema, const json& value, const std::string& path) {
    if (auto req = schema.find("required"); req != schema.end()) {
      for (const json& key : *req) {
        if (!value.contains(key.get<std::string>())) fail(path, "missing required property '" + key.get<std::string>() + "'");
      }
    }
    const auto props = schema.find("properties");
    const auto extra = schema.find("additionalProperties");
    for (auto it = value.begin(); it != value.end(); ++it) {
      const std::string child = path + "/" + it.key();
      if (props != schema.end() && props->contains(it.key())) {
        check((*props)[it.key()], it.value(), child);
      } else if (extra != schema.end()) {
        check(*extra, it.value(), child);
      }
    }
  }

  void fail(const std::string& path, const std::string& message) {
    errors.push_back((path.empty() ? "/" : path) + ": " + message);
  }

  const json& root_;
};

}  // namespace

std::vector<std::string> validate_json(std::string_view schema_text, std::string_view document) {
  json schema, doc;
  try {
    schema = json::parse(schema_text);
  } catch (const json::exception& e) {
    throw InputError(std::string("schema is not valid JSON: ") + e.what());
  }
  try {
    doc = json::parse(document);
  } catch (const json::exception& e) {
    return {std::string("document is not valid JSON: ") + e.what()};
  }
  Validator v(schema);
  v.check(schema, doc, "");
  return v.errors;
}

}  // namespace rareval::report
