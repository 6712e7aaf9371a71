#include "agentnet/routing.hpp"

#include <algorithm>
#include <functional>

#include <spdlog/spdlog.h>

#include "agentnet/error.hpp"
#include "agentnet/guard.hpp"

namespace agentnet {

namespace {

std::set<std::string> keys_of(const Json& ctx) {
  std::set<std::string> out;
  if (ctx.is_object()) {
    for (auto it = ctx.begin(); it != ctx.end(); ++it) out.insert(it.key());
  }
  return out;
}

// Everything reachable through membership, nested group ids included.
std::set<std::string> descendants(const AgentNetwork& net, std::string_view group_id) {
  std::set<std::string> out;
  std::function<void(std::string_view)> walk = [&](std::string_view id) {
    const Vertex* v = net.find(id);
    if (v == nullptr || v->group() == nullptr) return;
    for (const auto& m : v->group()->members) {
      if (out.insert(m).second) walk(m);
    }
  };
  walk(group_id);
  return out;
}

bool covers_any(const Vertex& v, const std::vector<std::string>& missing) {
  return std::any_of(missing.begin(), missing.end(),
                     [&](const std::string& p) { return v.output_schema().find(p) != nullptr; });
}

}  // namespace

std::vector<VertexId> DefaultPlanner::plan(const AgentNetwork& net, const Vertex& group, const Json& ctx,
                                           const std::set<VertexId>& done) const {
  const auto* g = group.group();
  if (g == nullptr) throw Error(Errc::InvalidVertex, group.id + " is not a group");

  const std::set<VertexId> members(g->members.begin(), g->members.end());
  std::vector<std::pair<VertexId, VertexId>> soft;  // predecessor -> successor
  for (const auto& r : net.routes()) {
    if (r.kind == RouteKind::Soft && members.count(r.from) != 0 && members.count(r.to) != 0) {
      soft.emplace_back(r.from, r.to);
    }
  }

  std::set<std::string> available = keys_of(ctx);
  std::set<VertexId> planned = done;
  std::vector<VertexId> order;

  while (true) {
    const Vertex* pick = nullptr;
    for (const auto& id : g->members) {
      if (planned.count(id) != 0) continue;
      const Vertex* v = net.find(id);
      if (v == nullptr) continue;
      const auto required = v->input_schema().required_names();
      const bool inputs_ready = std::all_of(required.begin(), required.end(),
                                            [&](const std::string& p) { return available.count(p) != 0; });
      if (!inputs_ready) continue;
      const bool soft_ready = std::all_of(soft.begin(), soft.end(), [&](const auto& edge) {
        return edge.second != id || planned.count(edge.first) != 0;
      });
      if (!soft_ready) continue;
      pick = v;
      break;
    }
    if (pick == nullptr) break;
    order.push_back(pick->id);
    planned.insert(pick->id);
    for (const auto& p : pick->output_schema().params) available.insert(p.name);
  }
  return order;
}

std::vector<VertexId> plan_group(const AgentNetwork& net, std::string_view group_id, const Json& ctx,
                                 const Planner& planner) {
  const Vertex* v = net.find(group_id);
  if (v == nullptr) throw Error(Errc::UnknownVertex, std::string(group_id));
  if (v->group() == nullptr) throw Error(Errc::InvalidVertex, std::string(group_id) + " is not a group");
  auto pre = check_params(ctx, v->input_schema());
  if (!pre.ok()) throw Error(Errc::ContractViolation, pre.describe());
  auto order = planner.plan(net, *v, ctx, {});
  if (order.empty()) {
    std::string detail;
    for (const auto& p : missing_member_inputs(net, *v, ctx, {})) detail += (detail.empty() ? "" : ",") + p;
    throw Error(Errc::NoSatisfiableMember, std::string(group_id) + " missing " + detail);
  }
  return order;
}

std::vector<std::string> missing_member_inputs(const AgentNetwork& net, const Vertex& group, const Json& ctx,
                                               const std::set<VertexId>& done) {
  const auto available = keys_of(ctx);
  std::set<std::string> missing;
  for (const auto& id : group.group()->members) {
    if (done.count(id) != 0) continue;
    const Vertex* v = net.find(id);
    if (v == nullptr) continue;
    for (const auto& p : v->input_schema().required_names()) {
      if (available.count(p) == 0) missing.insert(p);
    }
  }
  return {missing.begin(), missing.end()};
}

bool guard_allows(const Route& r, const Json& ctx) {
  if (!r.guard) return true;
  try {
    return GuardExpr::parse(*r.guard).evaluate(ctx);
  } catch (const Error& e) {
    spdlog::warn("route {}->{}: {}; treating guard as false", r.from, r.to, e.what());
    return false;
  }
}

namespace {

bool route_before(const Route& a, const Route& b) {
  if (a.priority != b.priority) return a.priority < b.priority;
  return a.to < b.to;
}

}  // namespace

std::optional<VertexId> resolve_hard(const AgentNetwork& net, std::string_view current, const Json& ctx) {
  std::optional<Route> best;
  for (const auto& r : net.routes_from(current, RouteKind::Hard)) {
    if (!guard_allows(r, ctx)) continue;
    if (!best || route_before(r, *best)) best = r;
  }
  if (!best) return std::nullopt;
  return best->to;
}

std::optional<ExtTarget> resolve_ext(const AgentNetwork& net, const Registry* registry, std::string_view group_id,
                                     const std::vector<std::string>& missing, const Json& ctx,
                                     const std::set<std::string>& exclude) {
  if (missing.empty()) return std::nullopt;
  std::set<std::string> blocked = descendants(net, group_id);
  blocked.insert(std::string(group_id));
  blocked.insert(exclude.begin(), exclude.end());

  auto routes = net.routes_from(group_id, RouteKind::Ext);
  std::sort(routes.begin(), routes.end(), route_before);
  for (const auto& r : routes) {
    if (blocked.count(r.to) != 0 || !guard_allows(r, ctx)) continue;
    auto target = net.find_shared(r.to);
    if (target && covers_any(*target, missing)) return ExtTarget{std::move(target), std::nullopt};
  }

  if (registry == nullptr || registry->size() == 0) return std::nullopt;
  DiscoveryQuery q;
  ParameterSchema wanted;
  for (const auto& p : missing) wanted.params.push_back({p, ParamKind::Any, {}, true});
  q.required_output = std::move(wanted);
  q.acceptable_input = ctx;
  q.top_k = registry->size();
  for (const auto& hit : registry->discover(q)) {
    auto desc = registry->get(hit.service_id);
    if (!desc) continue;
    if (blocked.count(hit.service_id) != 0 || blocked.count(desc->vertex.id) != 0) continue;
    if (!covers_any(desc->vertex, missing)) continue;
    return ExtTarget{std::make_shared<const Vertex>(std::move(desc->vertex)), hit.service_id};
  }
  return std::nullopt;
}

StallDecision detect_stall(std::span<const Json> history, int prior_reflections, double threshold) {
  StallDecision d;
  if (history.size() < 2) return d;
  d.similarity = json_similarity(history[history.size() - 2], history.back());
  if (d.similarity >= threshold) d.action = prior_reflections == 0 ? StallAction::Reflect : StallAction::Abort;
  return d;
}

}  // namespace agentnet
