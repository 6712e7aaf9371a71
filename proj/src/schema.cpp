#include "agentnet/schema.hpp"

#include <set>

#include "agentnet/error.hpp"

namespace agentnet {

std::string_view to_string(ParamKind kind) noexcept {
  switch (kind) {
    case ParamKind::String: return "string";
    case ParamKind::Number: return "number";
    case ParamKind::Boolean: return "boolean";
    case ParamKind::Object: return "object";
    case ParamKind::Array: return "array";
    case ParamKind::Any: return "any";
  }
  return "any";
}

std::optional<ParamKind> parse_param_kind(std::string_view text) noexcept {
  if (text == "string") return ParamKind::String;
  if (text == "number") return ParamKind::Number;
  if (text == "boolean") return ParamKind::Boolean;
  if (text == "object") return ParamKind::Object;
  if (text == "array") return ParamKind::Array;
  if (text == "any") return ParamKind::Any;
  return std::nullopt;
}

std::string_view json_kind_name(const Json& value) noexcept {
  if (value.is_string()) return "string";
  if (value.is_number()) return "number";
  if (value.is_boolean()) return "boolean";
  if (value.is_object()) return "object";
  if (value.is_array()) return "array";
  return "null";
}

bool kind_matches(ParamKind expected, const Json& value) noexcept {
  switch (expected) {
    case ParamKind::Any: return true;
    case ParamKind::String: return value.is_string();
    case ParamKind::Number: return value.is_number();
    case ParamKind::Boolean: return value.is_boolean();
    case ParamKind::Object: return value.is_object();
    case ParamKind::Array: return value.is_array();
  }
  return false;
}

const ParameterSpec* ParameterSchema::find(std::string_view name) const noexcept {
  for (const auto& p : params) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

std::vector<std::string> ParameterSchema::names() const {
  std::vector<std::string> out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back(p.name);
  return out;
}

std::vector<std::string> ParameterSchema::required_names() const {
  std::vector<std::string> out;
  for (const auto& p : params) {
    if (p.required) out.push_back(p.name);
  }
  return out;
}

bool is_identifier(std::string_view name) noexcept {
  if (name.empty()) return false;
  auto alpha = [](char c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_'; };
  auto digit = [](char c) { return c >= '0' && c <= '9'; };
  if (!alpha(name.front())) return false;
  for (char c : name.substr(1)) {
    if (!alpha(c) && !digit(c)) return false;
  }
  return true;
}

ValidationReport validate_schema(const ParameterSchema& schema) {
  ValidationReport report;
  std::set<std::string, std::less<>> seen;
  for (const auto& p : schema.params) {
    if (!is_identifier(p.name)) {
      report.violations.push_back("invalid identifier '" + p.name + "'");
      continue;
    }
    if (!seen.insert(p.name).second) {
      report.violations.push_back("duplicate name " + p.name);
    }
  }
  return report;
}

std::string ParamIssue::describe() const {
  if (code == Code::MissingRequired) return "MissingRequired(" + name + ")";
  return "KindMismatch(" + name + ", " + expected + ", " + actual + ")";
}

std::string CheckResult::describe() const {
  std::string out;
  for (const auto& e : errors) {
    if (!out.empty()) out += "; ";
    out += e.describe();
  }
  return out;
}

CheckResult check_params(const Json& values, const ParameterSchema& schema) {
  static const Json kEmpty = Json::object();
  const Json& obj = values.is_object() ? values : kEmpty;

  CheckResult result;
  for (const auto& p : schema.params) {
    auto it = obj.find(p.name);
    if (it == obj.end()) {
      if (p.required) result.errors.push_back({ParamIssue::Code::MissingRequired, p.name, {}, {}});
      continue;
    }
    if (!kind_matches(p.kind, *it)) {
      result.errors.push_back({ParamIssue::Code::KindMismatch, p.name, std::string(to_string(p.kind)),
                               std::string(json_kind_name(*it))});
    }
  }
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (schema.find(it.key()) == nullptr) result.warnings.push_back("undeclared key " + it.key());
  }
  return result;
}

CheckResult check_params(const ContextMap& ctx, const ParameterSchema& schema) {
  return check_params(ctx.values(), schema);
}

ContextMap ContextMap::from_values(const Json& object, std::string_view provenance) {
  ContextMap ctx;
  ctx.merge(object, provenance);
  return ctx;
}

void ContextMap::set(const std::string& name, Json value, std::string provenance) {
  entries_[name] = ContextEntry{std::move(value), std::move(provenance)};
}

void ContextMap::merge(const Json& object, std::string_view provenance) {
  if (!object.is_object()) return;
  for (auto it = object.begin(); it != object.end(); ++it) {
    entries_[it.key()] = ContextEntry{it.value(), std::string(provenance)};
  }
}

bool ContextMap::contains(std::string_view name) const { return entries_.find(name) != entries_.end(); }

const ContextEntry* ContextMap::find(std::string_view name) const {
  auto it = entries_.find(name);
  return it == entries_.end() ? nullptr : &it->second;
}

Json ContextMap::values() const {
  Json out = Json::object();
  for (const auto& [name, entry] : entries_) out[name] = entry.value;
  return out;
}

Json ContextMap::to_json() const {
  Json out = Json::object();
  for (const auto& [name, entry] : entries_) {
    out[name] = {{"value", entry.value}, {"provenance", entry.provenance}};
  }
  return out;
}

ContextMap ContextMap::from_json(const Json& j) {
  ContextMap ctx;
  if (!j.is_object()) return ctx;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const Json& e = it.value();
    ctx.set(it.key(), e.value("value", Json()), e.value("provenance", std::string(kPayloadProvenance)));
  }
  return ctx;
}

Json to_json(const ParameterSchema& schema) {
  Json params = Json::array();
  for (const auto& p : schema.params) {
    params.push_back({{"name", p.name},
                      {"kind", std::string(to_string(p.kind))},
                      {"description", p.description},
                      {"required", p.required}});
  }
  return Json{{"params", std::move(params)}};
}

ParameterSchema schema_from_json(const Json& j) {
  ParameterSchema schema;
  if (j.is_null()) return schema;
  if (!j.is_object()) throw Error(Errc::InvalidDescriptor, "schema must be an object");
  auto it = j.find("params");
  if (it == j.end()) return schema;
  if (!it->is_array()) throw Error(Errc::InvalidDescriptor, "schema.params must be an array");
  for (const auto& p : *it) {
    if (!p.is_object() || !p.contains("name") || !p["name"].is_string()) {
      throw Error(Errc::InvalidDescriptor, "parameter without a string name");
    }
    ParameterSpec spec;
    spec.name = p["name"].get<std::string>();
    const std::string kind = p.value("kind", std::string("any"));
    auto parsed = parse_param_kind(kind);
    if (!parsed) throw Error(Errc::InvalidDescriptor, "unknown parameter kind '" + kind + "'");
    spec.kind = *parsed;
    spec.description = p.value("description", std::string());
    spec.required = p.value("required", true);
    schema.params.push_back(std::move(spec));
  }
  return schema;
}

}  // namespace agentnet
