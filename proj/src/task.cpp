#include "agentnet/task.hpp"

#include <map>
#include <sstream>

namespace agentnet {

std::string_view to_string(TaskStatus s) noexcept {
  switch (s) {
    case TaskStatus::New: return "New";
    case TaskStatus::Running: return "Running";
    case TaskStatus::Success: return "Success";
    case TaskStatus::Fail: return "Fail";
  }
  return "New";
}

std::string_view to_string(FailureReason r) noexcept {
  switch (r) {
    case FailureReason::Timeout: return "Timeout";
    case FailureReason::ContractViolation: return "ContractViolation";
    case FailureReason::ExecutorError: return "ExecutorError";
    case FailureReason::StepBudgetExhausted: return "StepBudgetExhausted";
    case FailureReason::UnknownService: return "UnknownService";
  }
  return "ExecutorError";
}

std::string_view to_string(InvocationStatus s) noexcept {
  switch (s) {
    case InvocationStatus::Pending: return "pending";
    case InvocationStatus::Running: return "running";
    case InvocationStatus::Success: return "success";
    case InvocationStatus::Fail: return "fail";
  }
  return "pending";
}

std::string_view to_string(RouteUsed r) noexcept {
  switch (r) {
    case RouteUsed::Seed: return "SEED";
    case RouteUsed::Hard: return "HARD";
    case RouteUsed::Soft: return "SOFT";
    case RouteUsed::Ext: return "EXT";
  }
  return "SEED";
}

std::optional<TaskStatus> parse_task_status(std::string_view s) noexcept {
  if (s == "New") return TaskStatus::New;
  if (s == "Running") return TaskStatus::Running;
  if (s == "Success") return TaskStatus::Success;
  if (s == "Fail") return TaskStatus::Fail;
  return std::nullopt;
}

std::optional<FailureReason> parse_failure_reason(std::string_view s) noexcept {
  if (s == "Timeout") return FailureReason::Timeout;
  if (s == "ContractViolation") return FailureReason::ContractViolation;
  if (s == "ExecutorError") return FailureReason::ExecutorError;
  if (s == "StepBudgetExhausted") return FailureReason::StepBudgetExhausted;
  if (s == "UnknownService") return FailureReason::UnknownService;
  return std::nullopt;
}

std::string flow_vertex_kind(const Vertex& v) {
  if (v.group() != nullptr) return "group";
  if (const auto* e = v.external()) return e->protocol_tag == ProtocolTag::Rpa ? "rpa" : "external";
  if (std::holds_alternative<CommandLogic>(v.agent()->logic)) return "rpa";
  return "agent";
}

const Invocation* ExecutionGraph::find(std::string_view inv_id) const noexcept {
  for (const auto& n : nodes) {
    if (n.inv_id == inv_id) return &n;
  }
  return nullptr;
}

bool ExecutionGraph::is_acyclic() const {
  std::map<std::string_view, std::vector<std::string_view>> adj;
  for (const auto& e : edges) adj[e.producer].push_back(e.consumer);
  enum class Mark { None, Active, Done };
  std::map<std::string_view, Mark> mark;
  // Iterative DFS with an explicit stack of (node, next-child index).
  for (const auto& n : nodes) {
    if (mark[n.inv_id] != Mark::None) continue;
    std::vector<std::pair<std::string_view, std::size_t>> stack{{n.inv_id, 0}};
    mark[n.inv_id] = Mark::Active;
    while (!stack.empty()) {
      auto& [node, idx] = stack.back();
      auto& children = adj[node];
      if (idx < children.size()) {
        const auto child = children[idx++];
        if (mark[child] == Mark::Active) return false;
        if (mark[child] == Mark::None) {
          mark[child] = Mark::Active;
          stack.emplace_back(child, 0);
        }
      } else {
        mark[node] = Mark::Done;
        stack.pop_back();
      }
    }
  }
  return true;
}

Json to_json(const Task& t) {
  Json j{{"task_id", t.task_id},
         {"target", t.target},
         {"payload", t.payload},
         {"status", std::string(to_string(t.status))},
         {"created_at", t.created_at},
         {"deadline_s", t.deadline_s}};
  j["started_at"] = t.started_at ? Json(*t.started_at) : Json();
  j["ended_at"] = t.ended_at ? Json(*t.ended_at) : Json();
  j["failure_reason"] = t.failure_reason ? Json(std::string(to_string(*t.failure_reason))) : Json();
  if (!t.failure_detail.empty()) j["failure_detail"] = t.failure_detail;
  Json history = Json::array();
  for (auto s : t.status_history) history.push_back(std::string(to_string(s)));
  j["status_history"] = std::move(history);
  return j;
}

Json to_json(const Invocation& inv) {
  Json j{{"inv_id", inv.inv_id},
         {"vertex_id", inv.vertex_id},
         {"vertex_kind", inv.vertex_kind},
         {"input_ctx", inv.input_ctx.to_json()},
         {"status", std::string(to_string(inv.status))},
         {"started_at", inv.started_at},
         {"ended_at", inv.ended_at},
         {"start_seq", inv.start_seq},
         {"end_seq", inv.end_seq},
         {"wall_time_us", inv.wall_time_us},
         {"token_cost", inv.token_cost},
         {"reflection", inv.reflection}};
  j["parent_inv"] = inv.parent_inv ? Json(*inv.parent_inv) : Json();
  j["output_ctx"] = inv.output_ctx ? inv.output_ctx->to_json() : Json();
  j["route_kind_used"] = inv.route_kind_used ? Json(std::string(to_string(*inv.route_kind_used))) : Json();
  if (!inv.error.empty()) j["error"] = inv.error;
  return j;
}

Json to_json(const ExecutionGraph& g) {
  Json nodes = Json::array();
  for (const auto& n : g.nodes) nodes.push_back(to_json(n));
  Json edges = Json::array();
  for (const auto& e : g.edges) edges.push_back({{"producer", e.producer}, {"consumer", e.consumer}, {"param", e.param}});
  return {{"task_id", g.task_id}, {"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
}

namespace {

std::string dot_quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string_view status_colour(InvocationStatus s) {
  switch (s) {
    case InvocationStatus::Success: return "palegreen";
    case InvocationStatus::Fail: return "lightpink";
    case InvocationStatus::Running: return "lightyellow";
    case InvocationStatus::Pending: return "white";
  }
  return "white";
}

}  // namespace

std::string to_dot(const ExecutionGraph& g) {
  std::ostringstream out;
  out << "digraph " << dot_quote(g.task_id) << " {\n";
  out << "  rankdir=LR;\n";
  out << "  node [shape=box, style=filled];\n";
  for (const auto& n : g.nodes) {
    std::string label = n.vertex_id + "\n" + n.vertex_kind + " / " + std::string(to_string(n.status));
    if (n.route_kind_used) label += "\nvia " + std::string(to_string(*n.route_kind_used));
    out << "  " << dot_quote(n.inv_id) << " [label=" << dot_quote(label)
        << ", fillcolor=" << status_colour(n.status) << "];\n";
  }
  for (const auto& n : g.nodes) {
    if (n.parent_inv) {
      out << "  " << dot_quote(*n.parent_inv) << " -> " << dot_quote(n.inv_id)
          << " [style=dashed, arrowhead=none];\n";
    }
  }
  for (const auto& e : g.edges) {
    out << "  " << dot_quote(e.producer) << " -> " << dot_quote(e.consumer) << " [label=" << dot_quote(e.param)
        << "];\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace agentnet
