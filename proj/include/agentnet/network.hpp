#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "agentnet/schema.hpp"

namespace agentnet {

using VertexId = std::string;

// ---------------------------------------------------------------------------
// Logic bindings: how a vertex turns inputs into outputs.

struct BuiltinLogic {
  std::string transform_id;
  bool operator==(const BuiltinLogic&) const = default;
};

struct CommandLogic {
  std::vector<std::string> argv;
  double timeout_s = 30.0;
  bool operator==(const CommandLogic&) const = default;
};

struct HttpLogic {
  std::string endpoint_url;
  double timeout_s = 30.0;
  bool operator==(const HttpLogic&) const = default;
};

struct LlmLogic {
  std::string model_hint;
  bool operator==(const LlmLogic&) const = default;
};

using LogicBinding = std::variant<BuiltinLogic, CommandLogic, HttpLogic, LlmLogic>;

// ---------------------------------------------------------------------------
// Vertex kinds.

/// A single agent: name, description, system prompt, input/output
/// parameters and the logic that maps one onto the other.
struct AgentRole {
  std::string name;
  std::string description;
  std::string system_prompt;
  ParameterSchema input_schema;
  ParameterSchema output_schema;
  LogicBinding logic = BuiltinLogic{"identity"};

  bool operator==(const AgentRole&) const = default;
};

/// A goal-oriented group. Member order is significant: it is the planner's
/// tie-breaker.
struct AgentGroup {
  std::string name;
  std::string goal_description;
  std::string group_prompt;
  ParameterSchema input_schema;
  ParameterSchema output_schema;
  std::vector<VertexId> members;

  bool operator==(const AgentGroup&) const = default;
};

enum class ProtocolTag { Rpa, Mcp, Generic };

std::string_view to_string(ProtocolTag tag) noexcept;
std::optional<ProtocolTag> parse_protocol_tag(std::string_view text) noexcept;

/// Service living outside the framework (RPA workflow, MCP server, ...),
/// reached over HTTP.
struct ExternalDescriptor {
  std::string name;
  std::string description;
  ParameterSchema input_schema;
  ParameterSchema output_schema;
  ProtocolTag protocol_tag = ProtocolTag::Generic;
  std::string endpoint_url;

  bool operator==(const ExternalDescriptor&) const = default;
};

enum class VertexKind { Agent, Group, External };

std::string_view to_string(VertexKind kind) noexcept;

struct Vertex {
  VertexId id;
  std::variant<AgentRole, AgentGroup, ExternalDescriptor> body;

  VertexKind kind() const noexcept { return static_cast<VertexKind>(body.index()); }
  const std::string& name() const noexcept;
  const std::string& description() const noexcept;
  const ParameterSchema& input_schema() const noexcept;
  const ParameterSchema& output_schema() const noexcept;

  const AgentRole* agent() const noexcept { return std::get_if<AgentRole>(&body); }
  const AgentGroup* group() const noexcept { return std::get_if<AgentGroup>(&body); }
  const ExternalDescriptor* external() const noexcept {
    return std::get_if<ExternalDescriptor>(&body);
  }

  bool operator==(const Vertex&) const = default;
};

/// Checks that need only the vertex itself: id/name, schema validity,
/// logic-binding invariants, non-empty group membership.
ValidationReport validate_vertex(const Vertex& v);

// ---------------------------------------------------------------------------
// Routes.

enum class RouteKind { Hard, Soft, Ext };

std::string_view to_string(RouteKind kind) noexcept;
std::optional<RouteKind> parse_route_kind(std::string_view text) noexcept;

struct Route {
  VertexId from;
  VertexId to;
  RouteKind kind = RouteKind::Hard;
  int priority = 0;  // lower runs first
  std::optional<std::string> guard;

  bool operator==(const Route&) const = default;
};

// ---------------------------------------------------------------------------
// Network snapshots.

/// Immutable, versioned view of the agent network. Mutations produce a new
/// snapshot and leave the receiver untouched; vertexes are shared between
/// snapshots.
class AgentNetwork {
 public:
  AgentNetwork() = default;

  std::uint64_t version() const noexcept { return version_; }
  std::size_t vertex_count() const noexcept { return vertexes_.size(); }
  const std::vector<Route>& routes() const noexcept { return routes_; }

  const Vertex* find(std::string_view id) const noexcept;
  std::shared_ptr<const Vertex> find_shared(std::string_view id) const noexcept;
  bool contains(std::string_view id) const noexcept { return find(id) != nullptr; }
  std::vector<VertexId> vertex_ids() const;

  /// Groups listing `id` directly as a member.
  std::vector<VertexId> parents_of(std::string_view id) const;

  std::vector<Route> routes_from(std::string_view id, RouteKind kind) const;

  // Mutations. Each returns a snapshot whose version is this->version() + 1.
  AgentNetwork add_vertex(Vertex v) const;
  AgentNetwork add_route(Route r) const;
  AgentNetwork remove_vertex(std::string_view id) const;
  AgentNetwork remove_route(const Route& r) const;

  /// Depth-first member expansion of a group, nested groups expanded in
  /// place, first occurrence of each id kept.
  std::vector<VertexId> flatten_group(std::string_view group_id) const;

 private:
  void check_route(const Route& r) const;
  bool group_reaches(std::string_view from_group, std::string_view target) const;

  std::uint64_t version_ = 0;
  std::map<VertexId, std::shared_ptr<const Vertex>, std::less<>> vertexes_;
  std::vector<Route> routes_;
};

/// Single owner serializing mutations; readers take snapshots without
/// blocking writers for longer than a pointer swap.
class NetworkOwner {
 public:
  NetworkOwner() : current_(std::make_shared<const AgentNetwork>()) {}
  explicit NetworkOwner(AgentNetwork initial)
      : current_(std::make_shared<const AgentNetwork>(std::move(initial))) {}

  std::shared_ptr<const AgentNetwork> snapshot() const;

  template <class Fn>
  std::shared_ptr<const AgentNetwork> mutate(Fn&& fn) {
    std::lock_guard lock(write_mutex_);
    auto next = std::make_shared<const AgentNetwork>(fn(*snapshot()));
    std::lock_guard read_lock(read_mutex_);
    current_ = next;
    return next;
  }

  std::shared_ptr<const AgentNetwork> add_vertex(Vertex v);
  std::shared_ptr<const AgentNetwork> add_route(Route r);
  std::shared_ptr<const AgentNetwork> remove_vertex(std::string_view id);

 private:
  std::mutex write_mutex_;
  mutable std::mutex read_mutex_;
  std::shared_ptr<const AgentNetwork> current_;
};

// ---------------------------------------------------------------------------
// Descriptor files.

Json vertex_to_json(const Vertex& v);
/// Parses a vertex descriptor object. Throws Error(InvalidDescriptor).
Vertex vertex_from_json(const Json& j);

Json route_to_json(const Route& r);
Route route_from_json(const Json& j);

}  // namespace agentnet
