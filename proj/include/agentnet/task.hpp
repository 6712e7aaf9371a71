#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "agentnet/network.hpp"
#include "agentnet/registry.hpp"

namespace agentnet {

using TaskId = std::string;

enum class TaskStatus { New, Running, Success, Fail };
enum class FailureReason { Timeout, ContractViolation, ExecutorError, StepBudgetExhausted, UnknownService };
enum class InvocationStatus { Pending, Running, Success, Fail };
/// How the scheduler reached an invocation: SEED is the task target itself.
enum class RouteUsed { Seed, Hard, Soft, Ext };

std::string_view to_string(TaskStatus s) noexcept;
std::string_view to_string(FailureReason r) noexcept;
std::string_view to_string(InvocationStatus s) noexcept;
std::string_view to_string(RouteUsed r) noexcept;
std::optional<TaskStatus> parse_task_status(std::string_view s) noexcept;
std::optional<FailureReason> parse_failure_reason(std::string_view s) noexcept;

struct Task {
  TaskId task_id;
  VertexId target;
  Json payload = Json::object();
  TaskStatus status = TaskStatus::New;
  TimestampMs created_at = 0;
  std::optional<TimestampMs> started_at;
  std::optional<TimestampMs> ended_at;
  double deadline_s = 600.0;
  std::optional<FailureReason> failure_reason;
  std::string failure_detail;
  /// Every status the task has held, in order.
  std::vector<TaskStatus> status_history{TaskStatus::New};

  bool finished() const noexcept { return status == TaskStatus::Success || status == TaskStatus::Fail; }
};

/// Flow-log vertex kind: agent | rpa | group | external. Command-backed
/// agents and rpa-tagged externals count as RPA.
std::string flow_vertex_kind(const Vertex& v);

struct Invocation {
  std::string inv_id;
  VertexId vertex_id;
  std::string vertex_kind;  // flow_vertex_kind
  std::optional<std::string> parent_inv;  // enclosing group invocation
  ContextMap input_ctx;
  std::optional<ContextMap> output_ctx;
  InvocationStatus status = InvocationStatus::Pending;
  TimestampMs started_at = 0;
  TimestampMs ended_at = 0;
  /// Per-task logical clock; orders start/end events strictly even when
  /// millisecond timestamps tie.
  std::uint64_t start_seq = 0;
  std::uint64_t end_seq = 0;
  std::int64_t wall_time_us = 0;
  std::int64_t token_cost = 0;
  std::optional<RouteUsed> route_kind_used;
  bool reflection = false;
  std::string error;
};

struct DataEdge {
  std::string producer;
  std::string consumer;
  std::string param;

  bool operator==(const DataEdge&) const = default;
};

struct ExecutionGraph {
  TaskId task_id;
  std::vector<Invocation> nodes;
  std::vector<DataEdge> edges;

  const Invocation* find(std::string_view inv_id) const noexcept;
  bool is_acyclic() const;
};

Json to_json(const Task& t);
Json to_json(const Invocation& inv);
Json to_json(const ExecutionGraph& g);

/// Graphviz digraph of the invocation DAG: data edges labelled with the
/// parameter, dashed edges from a group invocation to its members.
std::string to_dot(const ExecutionGraph& g);

}  // namespace agentnet
