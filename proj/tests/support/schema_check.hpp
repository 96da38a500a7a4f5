#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace artsearch::testing {

#ifndef ARTSEARCH_SCHEMA_DIR
#error "ARTSEARCH_SCHEMA_DIR must point at the schemas directory"
#endif

inline nlohmann::json load_schema(const std::string& name) {
  std::ifstream in(std::filesystem::path(ARTSEARCH_SCHEMA_DIR) / name);
  if (!in) throw std::runtime_error("missing schema " + name);
  return nlohmann::json::parse(in);
}

/// Validator for the JSON Schema keywords the committed schemas use: type,
/// properties, required, additionalProperties, items, enum, const, minimum,
/// maximum, minItems, maxItems, minLength, maxLength, oneOf and local $ref.
class SchemaCheck {
 public:
  explicit SchemaCheck(nlohmann::json root) : root_(std::move(root)) {}
  static SchemaCheck named(const std::string& file) { return SchemaCheck(load_schema(file)); }

  std::vector<std::string> errors(const nlohmann::json& value) const {
    std::vector<std::string> out;
    check(root_, value, "", out);
    return out;
  }

  bool valid(const nlohmann::json& value) const { return errors(value).empty(); }

 private:
  const nlohmann::json& resolve(const nlohmann::json& schema) const {
    if (!schema.contains("$ref")) return schema;
    const auto ref = schema["$ref"].get<std::string>();
    return root_.at(nlohmann::json::json_pointer(ref.substr(1)));
  }

  static bool has_type(const nlohmann::json& v, const std::string& t) {
    if (t == "object") return v.is_object();
    if (t == "array") return v.is_array();
    if (t == "string") return v.is_string();
    if (t == "boolean") return v.is_boolean();
    if (t == "null") return v.is_null();
    if (t == "number") return v.is_number();
    if (t == "integer") return v.is_number_integer() || (v.is_number_float() && v.get<double>() == std::floor(v.get<double>()));
    return false;
  }

  void check(const nlohmann::json& s0, const nlohmann::json& v, const std::string& at, std::vector<std::string>& out) const {
    const auto& s = resolve(s0);
    if (s.contains("type")) {
      bool ok = false;
      if (s["type"].is_array()) {
        for (const auto& t : s["type"]) ok = ok || has_type(v, t.get<std::string>());
      } else {
        ok = has_type(v, s["type"].get<std::string>());
      }
      if (!ok) {
        out.push_back(fmt::format("{}: expected type {}", at, s["type"].dump()));
        return;
      }
    }
    if (s.contains("const") && v != s["const"]) out.push_back(fmt::format("{}: expected {}", at, s["const"].dump()));
    if (s.contains("enum")) {
      bool found = false;
      for (const auto& e : s["enum"]) found = found || e == v;
      if (!found) out.push_back(fmt::format("{}: {} not in enum", at, v.dump()));
    }
    if (v.is_number()) {
      const double x = v.get<double>();
      if (s.contains("minimum") && x < s["minimum"].get<double>()) out.push_back(fmt::format("{}: below minimum", at));
      if (s.contains("maximum") && x > s["maximum"].get<double>()) out.push_back(fmt::format("{}: above maximum", at));
    }
    if (v.is_string()) {
      const size_t n = v.get_ref<const std::string&>().size();
      if (s.contains("minLength") && n < s["minLength"].get<size_t>()) out.push_back(fmt::format("{}: too short", at));
      if (s.contains("maxLength") && n > s["maxLength"].get<size_t>()) out.push_back(fmt::format("{}: too long", at));
    }
    if (v.is_array()) {
      if (s.contains("minItems") && v.size() < s["minItems"].get<size_t>()) out.push_back(fmt::format("{}: too few items", at));
      if (s.contains("maxItems") && v.size() > s["maxItems"].get<size_t>()) out.push_back(fmt::format("{}: too many items", at));
      if (s.contains("items")) {
        for (size_t i = 0; i < v.size(); ++i) check(s["items"], v[i], fmt::format("{}/{}", at, i), out);
      }
    }
    if (v.is_object()) {
      if (s.contains("required")) {
        for (const auto& r : s["required"]) {
          if (!v.contains(r.get<std::string>())) out.push_back(fmt::format("{}: missing '{}'", at, r.get<std::string>()));
        }
      }
      for (const auto& [key, child] : v.items()) {
        const std::string path = at + "/" + key;
        if (s.contains("properties") && s["properties"].contains(key)) {
          check(s["properties"][key], child, path, out);
        } else if (s.contains("additionalProperties")) {
          const auto& ap = s["additionalProperties"];
          if (ap.is_boolean()) {
            if (!ap.get<bool>()) out.push_back(fmt::format("{}: unexpected property", path));
          } else {
            check(ap, child, path, out);
          }
        }
      }
    }
    if (s.contains("oneOf")) {
      size_t matches = 0;
      for (const auto& alt : s["oneOf"]) {
        std::vector<std::string> sub;
        check(alt, v, at, sub);
        matches += sub.empty();
      }
      if (matches != 1) out.push_back(fmt::format("{}: matches {} oneOf alternatives", at, matches));
    }
  }

  nlohmann::json root_;
};

}  // namespace artsearch::testing
