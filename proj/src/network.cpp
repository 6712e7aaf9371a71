#include "agentnet/network.hpp"

#include <algorithm>
#include <functional>
#include <set>

#include "agentnet/error.hpp"

namespace agentnet {

std::string_view to_string(ProtocolTag tag) noexcept {
  switch (tag) {
    case ProtocolTag::Rpa: return "rpa";
    case ProtocolTag::Mcp: return "mcp";
    case ProtocolTag::Generic: return "generic";
  }
  return "generic";
}

std::optional<ProtocolTag> parse_protocol_tag(std::string_view text) noexcept {
  if (text == "rpa") return ProtocolTag::Rpa;
  if (text == "mcp") return ProtocolTag::Mcp;
  if (text == "generic") return ProtocolTag::Generic;
  return std::nullopt;
}

std::string_view to_string(VertexKind kind) noexcept {
  switch (kind) {
    case VertexKind::Agent: return "agent";
    case VertexKind::Group: return "group";
    case VertexKind::External: return "external";
  }
  return "agent";
}

std::string_view to_string(RouteKind kind) noexcept {
  switch (kind) {
    case RouteKind::Hard: return "HARD";
    case RouteKind::Soft: return "SOFT";
    case RouteKind::Ext: return "EXT";
  }
  return "HARD";
}

std::optional<RouteKind> parse_route_kind(std::string_view text) noexcept {
  if (text == "HARD" || text == "hard") return RouteKind::Hard;
  if (text == "SOFT" || text == "soft") return RouteKind::Soft;
  if (text == "EXT" || text == "ext") return RouteKind::Ext;
  return std::nullopt;
}

const std::string& Vertex::name() const noexcept {
  return std::visit([](const auto& b) -> const std::string& { return b.name; }, body);
}

const std::string& Vertex::description() const noexcept {
  if (const auto* g = group()) return g->goal_description;
  if (const auto* a = agent()) return a->description;
  return std::get<ExternalDescriptor>(body).description;
}

const ParameterSchema& Vertex::input_schema() const noexcept {
  return std::visit([](const auto& b) -> const ParameterSchema& { return b.input_schema; }, body);
}

const ParameterSchema& Vertex::output_schema() const noexcept {
  return std::visit([](const auto& b) -> const ParameterSchema& { return b.output_schema; }, body);
}

ValidationReport validate_vertex(const Vertex& v) {
  ValidationReport report;
  if (v.id.empty()) report.violations.push_back("empty vertex id");
  if (v.name().empty()) report.violations.push_back("empty name");
  for (auto& msg : validate_schema(v.input_schema()).violations) {
    report.violations.push_back("input_schema: " + msg);
  }
  for (auto& msg : validate_schema(v.output_schema()).violations) {
    report.violations.push_back("output_schema: " + msg);
  }
  if (const auto* a = v.agent()) {
    if (const auto* c = std::get_if<CommandLogic>(&a->logic)) {
      if (c->argv.empty()) report.violations.push_back("command logic with empty argv");
      if (!(c->timeout_s > 0)) report.violations.push_back("command timeout_s must be positive");
    } else if (const auto* h = std::get_if<HttpLogic>(&a->logic)) {
      if (h->endpoint_url.empty()) report.violations.push_back("http logic without endpoint");
      if (!(h->timeout_s > 0)) report.violations.push_back("http timeout_s must be positive");
    }
  } else if (const auto* g = v.group()) {
    if (g->members.empty()) report.violations.push_back("group has no members");
    std::set<std::string_view> seen;
    for (const auto& m : g->members) {
      if (m == v.id) report.violations.push_back("group lists itself as a member");
      if (!seen.insert(m).second) report.violations.push_back("duplicate member " + m);
    }
  }
  return report;
}

// ---------------------------------------------------------------------------

const Vertex* AgentNetwork::find(std::string_view id) const noexcept {
  auto it = vertexes_.find(id);
  return it == vertexes_.end() ? nullptr : it->second.get();
}

std::shared_ptr<const Vertex> AgentNetwork::find_shared(std::string_view id) const noexcept {
  auto it = vertexes_.find(id);
  return it == vertexes_.end() ? nullptr : it->second;
}

std::vector<VertexId> AgentNetwork::vertex_ids() const {
  std::vector<VertexId> ids;
  ids.reserve(vertexes_.size());
  for (const auto& [id, _] : vertexes_) ids.push_back(id);
  return ids;
}

std::vector<VertexId> AgentNetwork::parents_of(std::string_view id) const {
  std::vector<VertexId> out;
  for (const auto& [gid, v] : vertexes_) {
    if (const auto* g = v->group()) {
      if (std::find(g->members.begin(), g->members.end(), id) != g->members.end()) out.push_back(gid);
    }
  }
  return out;
}

std::vector<Route> AgentNetwork::routes_from(std::string_view id, RouteKind kind) const {
  std::vector<Route> out;
  for (const auto& r : routes_) {
    if (r.kind == kind && r.from == id) out.push_back(r);
  }
  return out;
}

bool AgentNetwork::group_reaches(std::string_view from_group, std::string_view target) const {
  std::set<std::string, std::less<>> visited;
  std::function<bool(std::string_view)> walk = [&](std::string_view gid) {
    const Vertex* v = find(gid);
    if (v == nullptr || v->group() == nullptr) return false;
    if (!visited.emplace(gid).second) return false;
    for (const auto& m : v->group()->members) {
      if (m == target || walk(m)) return true;
    }
    return false;
  };
  return walk(from_group);
}

AgentNetwork AgentNetwork::add_vertex(Vertex v) const {
  if (contains(v.id)) throw Error(Errc::DuplicateId, v.id);
  auto report = validate_vertex(v);
  if (!report.ok()) throw Error(Errc::InvalidVertex, v.id + ": " + report.violations.front());
  if (const auto* g = v.group()) {
    for (const auto& m : g->members) {
      if (!contains(m)) throw Error(Errc::InvalidVertex, v.id + ": unknown member " + m);
      if (group_reaches(m, v.id)) throw Error(Errc::InvalidVertex, v.id + ": membership cycle via " + m);
    }
  }
  AgentNetwork next = *this;
  auto id = v.id;
  next.vertexes_.emplace(std::move(id), std::make_shared<const Vertex>(std::move(v)));
  ++next.version_;
  return next;
}

void AgentNetwork::check_route(const Route& r) const {
  if (r.from == r.to) throw Error(Errc::SelfLoop, r.from);
  const Vertex* from = find(r.from);
  if (from == nullptr) throw Error(Errc::UnknownEndpoint, r.from);
  if (find(r.to) == nullptr) throw Error(Errc::UnknownEndpoint, r.to);
  if (r.kind == RouteKind::Soft) {
    auto pa = parents_of(r.from);
    auto pb = parents_of(r.to);
    std::sort(pa.begin(), pa.end());
    std::sort(pb.begin(), pb.end());
    std::vector<VertexId> common;
    std::set_intersection(pa.begin(), pa.end(), pb.begin(), pb.end(), std::back_inserter(common));
    if (common.empty()) throw Error(Errc::SoftRouteOutsideGroup, r.from + "->" + r.to);
  } else if (r.kind == RouteKind::Ext) {
    if (from->group() == nullptr) throw Error(Errc::InvalidVertex, "EXT route source is not a group: " + r.from);
    if (group_reaches(r.from, r.to)) throw Error(Errc::ExtRouteInsideGroup, r.from + "->" + r.to);
  }
}

AgentNetwork AgentNetwork::add_route(Route r) const {
  check_route(r);
  AgentNetwork next = *this;
  next.routes_.push_back(std::move(r));
  ++next.version_;
  return next;
}

AgentNetwork AgentNetwork::remove_route(const Route& r) const {
  auto it = std::find(routes_.begin(), routes_.end(), r);
  if (it == routes_.end()) throw Error(Errc::UnknownEndpoint, "no such route " + r.from + "->" + r.to);
  AgentNetwork next = *this;
  next.routes_.erase(next.routes_.begin() + (it - routes_.begin()));
  ++next.version_;
  return next;
}

AgentNetwork AgentNetwork::remove_vertex(std::string_view id) const {
  if (!contains(id)) throw Error(Errc::UnknownVertex, std::string(id));
  AgentNetwork next = *this;
  for (auto& [gid, v] : next.vertexes_) {
    const auto* g = v->group();
    if (g == nullptr) continue;
    auto it = std::find(g->members.begin(), g->members.end(), id);
    if (it == g->members.end()) continue;
    if (g->members.size() == 1) throw Error(Errc::WouldEmptyGroup, gid);
    Vertex copy = *v;
    auto& members = std::get<AgentGroup>(copy.body).members;
    members.erase(members.begin() + (it - g->members.begin()));
    v = std::make_shared<const Vertex>(std::move(copy));
  }
  next.vertexes_.erase(next.vertexes_.find(id));
  std::erase_if(next.routes_, [&](const Route& r) { return r.from == id || r.to == id; });
  ++next.version_;
  return next;
}

std::vector<VertexId> AgentNetwork::flatten_group(std::string_view group_id) const {
  const Vertex* root = find(group_id);
  if (root == nullptr) throw Error(Errc::UnknownVertex, std::string(group_id));
  if (root->group() == nullptr) throw Error(Errc::InvalidVertex, std::string(group_id) + " is not a group");

  std::vector<VertexId> out;
  std::set<std::string, std::less<>> emitted;
  std::vector<std::string_view> stack;  // groups currently being expanded

  std::function<void(const Vertex&)> expand = [&](const Vertex& g) {
    if (std::find(stack.begin(), stack.end(), g.id) != stack.end()) {
      throw Error(Errc::CycleDetected, g.id);
    }
    stack.push_back(g.id);
    for (const auto& m : g.group()->members) {
      const Vertex* mv = find(m);
      if (mv == nullptr) throw Error(Errc::UnknownVertex, m);
      if (mv->group() != nullptr) {
        expand(*mv);
      } else if (emitted.insert(m).second) {
        out.push_back(m);
      }
    }
    stack.pop_back();
  };
  expand(*root);
  return out;
}

// ---------------------------------------------------------------------------

std::shared_ptr<const AgentNetwork> NetworkOwner::snapshot() const {
  std::lock_guard lock(read_mutex_);
  return current_;
}

std::shared_ptr<const AgentNetwork> NetworkOwner::add_vertex(Vertex v) {
  return mutate([&](const AgentNetwork& net) { return net.add_vertex(std::move(v)); });
}

std::shared_ptr<const AgentNetwork> NetworkOwner::add_route(Route r) {
  return mutate([&](const AgentNetwork& net) { return net.add_route(std::move(r)); });
}

std::shared_ptr<const AgentNetwork> NetworkOwner::remove_vertex(std::string_view id) {
  return mutate([&](const AgentNetwork& net) { return net.remove_vertex(id); });
}

// ---------------------------------------------------------------------------
// Descriptor JSON.

namespace {

Json logic_to_json(const LogicBinding& logic) {
  if (const auto* b = std::get_if<BuiltinLogic>(&logic)) return {{"builtin", b->transform_id}};
  if (const auto* c = std::get_if<CommandLogic>(&logic)) {
    return {{"command", {{"argv", c->argv}, {"timeout_s", c->timeout_s}}}};
  }
  if (const auto* h = std::get_if<HttpLogic>(&logic)) {
    return {{"http", {{"endpoint", h->endpoint_url}, {"timeout_s", h->timeout_s}}}};
  }
  return {{"llm", {{"model_hint", std::get<LlmLogic>(logic).model_hint}}}};
}

LogicBinding logic_from_json(const Json& j) {
  if (!j.is_object() || j.size() != 1) {
    throw Error(Errc::InvalidDescriptor, "logic must be an object with exactly one variant");
  }
  try {
    if (j.contains("builtin")) return BuiltinLogic{j.at("builtin").get<std::string>()};
    if (j.contains("command")) {
      const auto& c = j.at("command");
      return CommandLogic{c.at("argv").get<std::vector<std::string>>(), c.value("timeout_s", 30.0)};
    }
    if (j.contains("http")) {
      const auto& h = j.at("http");
      return HttpLogic{h.at("endpoint").get<std::string>(), h.value("timeout_s", 30.0)};
    }
    if (j.contains("llm")) return LlmLogic{j.at("llm").value("model_hint", std::string())};
  } catch (const Json::exception& e) {
    throw Error(Errc::InvalidDescriptor, std::string("logic: ") + e.what());
  }
  throw Error(Errc::InvalidDescriptor, "unknown logic variant");
}

std::string required_string(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    throw Error(Errc::InvalidDescriptor, std::string("missing string field '") + key + "'");
  }
  return it->get<std::string>();
}

std::string optional_string(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return {};
  if (!it->is_string()) throw Error(Errc::InvalidDescriptor, std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

}  // namespace

Json vertex_to_json(const Vertex& v) {
  Json j;
  j["id"] = v.id;
  j["kind"] = std::string(to_string(v.kind()));
  j["name"] = v.name();
  j["description"] = v.description();
  j["input_schema"] = to_json(v.input_schema());
  j["output_schema"] = to_json(v.output_schema());
  if (const auto* a = v.agent()) {
    j["system_prompt"] = a->system_prompt;
    j["logic"] = logic_to_json(a->logic);
  } else if (const auto* g = v.group()) {
    j["system_prompt"] = g->group_prompt;
    j["members"] = g->members;
  } else {
    const auto& e = std::get<ExternalDescriptor>(v.body);
    j["protocol_tag"] = std::string(to_string(e.protocol_tag));
    j["endpoint_url"] = e.endpoint_url;
  }
  return j;
}

Vertex vertex_from_json(const Json& j) {
  if (!j.is_object()) throw Error(Errc::InvalidDescriptor, "descriptor must be a JSON object");
  Vertex v;
  v.id = required_string(j, "id");
  const std::string kind = required_string(j, "kind");
  const std::string name = required_string(j, "name");
  const std::string description = optional_string(j, "description");
  const std::string prompt = optional_string(j, "system_prompt");
  ParameterSchema in = schema_from_json(j.value("input_schema", Json()));
  ParameterSchema out = schema_from_json(j.value("output_schema", Json()));

  if (kind == "agent") {
    LogicBinding logic = BuiltinLogic{"identity"};
    if (auto it = j.find("logic"); it != j.end()) logic = logic_from_json(*it);
    v.body = AgentRole{name, description, prompt, std::move(in), std::move(out), std::move(logic)};
  } else if (kind == "group") {
    auto it = j.find("members");
    if (it == j.end() || !it->is_array()) throw Error(Errc::InvalidDescriptor, "group without members array");
    std::vector<VertexId> members;
    for (const auto& m : *it) {
      if (!m.is_string()) throw Error(Errc::InvalidDescriptor, "member ids must be strings");
      members.push_back(m.get<std::string>());
    }
    v.body = AgentGroup{name, description, prompt, std::move(in), std::move(out), std::move(members)};
  } else if (kind == "external") {
    const std::string tag_text = optional_string(j, "protocol_tag");
    auto tag = tag_text.empty() ? std::optional(ProtocolTag::Generic) : parse_protocol_tag(tag_text);
    if (!tag) throw Error(Errc::InvalidDescriptor, "unknown protocol_tag '" + tag_text + "'");
    v.body = ExternalDescriptor{name, description, std::move(in), std::move(out), *tag,
                                optional_string(j, "endpoint_url")};
  } else {
    throw Error(Errc::InvalidDescriptor, "unknown kind '" + kind + "'");
  }
  return v;
}

Json route_to_json(const Route& r) {
  Json j{{"from", r.from}, {"to", r.to}, {"kind", std::string(to_string(r.kind))}, {"priority", r.priority}};
  if (r.guard) j["guard"] = *r.guard;
  return j;
}

Route route_from_json(const Json& j) {
  if (!j.is_object()) throw Error(Errc::InvalidDescriptor, "route must be an object");
  Route r;
  r.from = required_string(j, "from");
  r.to = required_string(j, "to");
  const std::string kind = required_string(j, "kind");
  auto parsed = parse_route_kind(kind);
  if (!parsed) throw Error(Errc::InvalidDescriptor, "unknown route kind '" + kind + "'");
  r.kind = *parsed;
  if (auto it = j.find("priority"); it != j.end()) {
    if (!it->is_number_integer()) throw Error(Errc::InvalidDescriptor, "priority must be an integer");
    r.priority = it->get<int>();
  }
  if (auto g = optional_string(j, "guard"); !g.empty()) r.guard = g;
  return r;
}

}  // namespace agentnet
