#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "agentnet/text.hpp"

namespace agentnet {

enum class ParamKind { String, Number, Boolean, Object, Array, Any };

std::string_view to_string(ParamKind kind) noexcept;
std::optional<ParamKind> parse_param_kind(std::string_view text) noexcept;

/// Kind name of a concrete JSON value ("string", "number", ..., "null").
std::string_view json_kind_name(const Json& value) noexcept;
bool kind_matches(ParamKind expected, const Json& value) noexcept;

struct ParameterSpec {
  std::string name;
  ParamKind kind = ParamKind::Any;
  std::string description;
  bool required = true;

  bool operator==(const ParameterSpec&) const = default;
};

struct ParameterSchema {
  std::vector<ParameterSpec> params;

  const ParameterSpec* find(std::string_view name) const noexcept;
  std::vector<std::string> names() const;
  std::vector<std::string> required_names() const;

  bool operator==(const ParameterSchema&) const = default;
};

bool is_identifier(std::string_view name) noexcept;

struct ValidationReport {
  std::vector<std::string> violations;

  bool ok() const noexcept { return violations.empty(); }
};

ValidationReport validate_schema(const ParameterSchema& schema);

struct ParamIssue {
  enum class Code { MissingRequired, KindMismatch };

  Code code;
  std::string name;
  std::string expected;  // KindMismatch only
  std::string actual;    // KindMismatch only

  bool operator==(const ParamIssue&) const = default;
  std::string describe() const;
};

struct CheckResult {
  std::vector<ParamIssue> errors;
  std::vector<std::string> warnings;  // undeclared keys

  bool ok() const noexcept { return errors.empty(); }
  std::string describe() const;
};

/// Value of one context entry together with where it came from: an
/// invocation id, or `kPayloadProvenance` for values supplied with the task.
struct ContextEntry {
  Json value;
  std::string provenance;

  bool operator==(const ContextEntry&) const = default;
};

inline constexpr std::string_view kPayloadProvenance = "task_payload";

class ContextMap {
 public:
  ContextMap() = default;

  /// Every key of `object` becomes an entry with the given provenance.
  static ContextMap from_values(const Json& object,
                                std::string_view provenance = kPayloadProvenance);

  void set(const std::string& name, Json value, std::string provenance);
  void merge(const Json& object, std::string_view provenance);

  bool contains(std::string_view name) const;
  const ContextEntry* find(std::string_view name) const;
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  const std::map<std::string, ContextEntry, std::less<>>& entries() const noexcept {
    return entries_;
  }

  /// Plain {name: value} object.
  Json values() const;
  /// {name: {"value": ..., "provenance": ...}}
  Json to_json() const;
  static ContextMap from_json(const Json& j);

  bool operator==(const ContextMap&) const = default;

 private:
  std::map<std::string, ContextEntry, std::less<>> entries_;
};

/// Runtime contract check. `values` must be a JSON object; anything else
/// is treated as empty.
CheckResult check_params(const Json& values, const ParameterSchema& schema);
CheckResult check_params(const ContextMap& ctx, const ParameterSchema& schema);

Json to_json(const ParameterSchema& schema);
/// Throws Error(InvalidDescriptor) on structural problems (unknown kind,
/// missing fields). Semantic checks are validate_schema's job.
ParameterSchema schema_from_json(const Json& j);

}  // namespace agentnet
