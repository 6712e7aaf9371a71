#include "fixtures.hpp"

#include <cstdlib>
#include <filesystem>

namespace agentnet::testing {

ParameterSchema schema(const std::vector<std::string>& names) {
  ParameterSchema s;
  for (std::string n : names) {
    ParameterSpec p;
    if (auto colon = n.find(':'); colon != std::string::npos) {
      p.kind = parse_param_kind(n.substr(colon + 1)).value_or(ParamKind::Any);
      n = n.substr(0, colon);
    }
    if (!n.empty() && n.back() == '?') {
      p.required = false;
      n.pop_back();
    }
    p.name = n;
    s.params.push_back(p);
  }
  return s;
}

ParameterSchema schema(std::initializer_list<std::string> names) { return schema(std::vector<std::string>(names)); }

Vertex agent(const std::string& id, const std::vector<std::string>& in, const std::vector<std::string>& out,
             LogicBinding logic, const std::string& description) {
  AgentRole role;
  role.name = id;
  role.description = description.empty() ? "agent " + id : description;
  role.system_prompt = "You are " + id + ".";
  role.input_schema = schema(in);
  role.output_schema = schema(out);
  role.logic = std::move(logic);
  return Vertex{id, role};
}

Vertex agent(const std::string& id, std::initializer_list<std::string> in, std::initializer_list<std::string> out,
             LogicBinding logic, const std::string& description) {
  return agent(id, std::vector<std::string>(in), std::vector<std::string>(out), std::move(logic), description);
}

Vertex group(const std::string& id, std::vector<VertexId> members, const std::vector<std::string>& in,
             const std::vector<std::string>& out) {
  AgentGroup g;
  g.name = id;
  g.goal_description = "group " + id;
  g.group_prompt = "Coordinate " + id + ".";
  g.input_schema = schema(in);
  g.output_schema = schema(out);
  g.members = std::move(members);
  return Vertex{id, g};
}

Vertex group(const std::string& id, std::vector<VertexId> members, std::initializer_list<std::string> in,
             std::initializer_list<std::string> out) {
  return group(id, std::move(members), std::vector<std::string>(in), std::vector<std::string>(out));
}

Vertex producer(const std::string& id, const std::vector<std::string>& in, const std::vector<std::string>& out) {
  std::string transform = "identity";
  if (out.size() == 1) transform = "const:" + out.front() + ":\"" + id + "." + out.front() + "\"";
  return agent(id, in, out, BuiltinLogic{transform});
}

void MockBackend::on(const VertexId& id, Fn fn) {
  std::lock_guard lock(mutex_);
  scripts_[id] = std::move(fn);
}

void MockBackend::produce_outputs(const VertexId& id, std::int64_t tokens) {
  on(id, [tokens](const Vertex& v, const Json& ctx) {
    ExecutionResult r;
    const std::string prefix = ctx.contains("sentinel") ? ctx["sentinel"].get<std::string>() + "/" : "";
    for (const auto& p : v.output_schema().params) {
      if (p.name == "sentinel") {
        r.output[p.name] = ctx.value("sentinel", std::string());
      } else {
        r.output[p.name] = prefix + v.id + "." + p.name;
      }
    }
    r.token_cost = tokens;
    return r;
  });
}

ExecutionResult MockBackend::execute(const Vertex& v, const Json& ctx, const ExecOptions& opts) {
  Fn fn;
  {
    std::lock_guard lock(mutex_);
    ++calls_[v.id];
    auto it = scripts_.find(v.id);
    if (it != scripts_.end()) fn = it->second;
  }
  if (fn) return fn(v, ctx);
  return fallback_.execute(v, ctx, opts);
}

int MockBackend::calls(const VertexId& id) const {
  std::lock_guard lock(mutex_);
  auto it = calls_.find(id);
  return it == calls_.end() ? 0 : it->second;
}

int MockBackend::total_calls() const {
  std::lock_guard lock(mutex_);
  int n = 0;
  for (const auto& [_, c] : calls_) n += c;
  return n;
}

TempDir::TempDir() {
  std::string tmpl = (std::filesystem::temp_directory_path() / "agentnet-XXXXXX").string();
  if (mkdtemp(tmpl.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
  path_ = tmpl;
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

}  // namespace agentnet::testing
