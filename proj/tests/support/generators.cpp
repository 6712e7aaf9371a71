#include "generators.hpp"

namespace agentnet::testing {

namespace {

int uniform(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

const char* pick(Rng& rng, std::initializer_list<const char*> options) {
  return *(options.begin() + uniform(rng, 0, static_cast<int>(options.size()) - 1));
}

const std::vector<std::string> kWords{"plan", "code", "review", "test", "spec", "draft", "fix", "merge", "deploy", "doc"};

std::string random_text(Rng& rng, int words) {
  std::string out;
  for (int i = 0; i < words; ++i) {
    if (i > 0) out += ' ';
    out += kWords[static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(kWords.size()) - 1))];
  }
  return out;
}

}  // namespace

FlowRecord random_flow_record(Rng& rng, int index, int vertex_pool) {
  FlowRecord r;
  r.task_id = "task-" + std::to_string(index);
  const int roll = uniform(rng, 0, 99);
  r.status = roll < 10 ? "New" : roll < 15 ? "Running" : roll < 70 ? "Success" : "Fail";
  r.target = "v" + std::to_string(uniform(rng, 0, vertex_pool - 1));
  r.created_at = 1'700'000'000'000 + index * 1000;
  r.input_digest = canonical_json(Json{{"task", random_text(rng, 3)}});

  const int length = r.status == "New" ? 0 : uniform(rng, 1, 8);
  for (int i = 0; i < length; ++i) {
    ChainEntry e;
    // Skewed choice: a few vertexes dominate.
    const int v = std::min(uniform(rng, 0, vertex_pool - 1), uniform(rng, 0, vertex_pool - 1));
    e.vertex_id = "v" + std::to_string(v);
    e.vertex_kind = v % 5 == 4 ? "rpa" : v % 7 == 6 ? "group" : v % 11 == 10 ? "external" : "agent";
    if (r.status == "Running" && i == length - 1) {
      e.status = "running";
    } else if (r.status == "Fail" && i == length - 1) {
      e.status = "fail";
    } else {
      e.status = uniform(rng, 0, 19) == 0 ? "pending" : "success";
    }
    e.wall_time_ms = uniform(rng, 0, 60'000);
    e.token_cost = e.vertex_kind == "rpa" ? 0 : uniform(rng, 0, 3000);
    e.route_kind_used = i == 0 ? "SEED" : pick(rng, {"HARD", "SOFT", "EXT"});
    e.input_digest = canonical_json(Json{{"in", random_text(rng, uniform(rng, 0, 5))}});
    r.total_time_ms += e.wall_time_ms;
    r.total_tokens += e.token_cost;
    r.chain.push_back(std::move(e));
  }
  if (r.status == "Success" || r.status == "Fail") {
    r.ended_at = r.created_at + r.total_time_ms;
    if (r.status == "Fail") r.failure_reason = pick(rng, {"Timeout", "ContractViolation", "ExecutorError"});
  }
  if (r.status == "Success" || (r.status == "Fail" && length > 1)) {
    r.output_digest = canonical_json(Json{{"out", random_text(rng, uniform(rng, 1, 6))}});
  }
  return r;
}

std::vector<FlowRecord> random_flow_log(Rng& rng, int count, int vertex_pool) {
  std::vector<FlowRecord> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out.push_back(random_flow_record(rng, i, vertex_pool));
  return out;
}

Json random_value(Rng& rng, int depth) {
  switch (uniform(rng, 0, depth > 1 ? 4 : 6)) {
    case 0: return random_text(rng, 1);
    case 1: return uniform(rng, -100, 100);
    case 2: return uniform(rng, 0, 1) == 1;
    case 3: return Json(nullptr);
    case 4: return uniform(rng, 0, 1000) / 8.0;
    case 5: return Json::array({random_value(rng, depth + 1), random_value(rng, depth + 1)});
    default: return Json{{"k", random_value(rng, depth + 1)}};
  }
}

ParameterSchema random_schema(Rng& rng, int max_params) {
  ParameterSchema s;
  const int n = uniform(rng, 0, max_params);
  for (int i = 0; i < n; ++i) {
    ParameterSpec p;
    p.name = "p" + std::to_string(i);
    p.kind = static_cast<ParamKind>(uniform(rng, 0, 5));
    p.required = uniform(rng, 0, 3) != 0;
    s.params.push_back(p);
  }
  return s;
}

namespace {

Json value_of_kind(Rng& rng, ParamKind kind) {
  switch (kind) {
    case ParamKind::String: return random_text(rng, 2);
    case ParamKind::Number: return uniform(rng, 0, 1) ? Json(uniform(rng, -5, 5)) : Json(uniform(rng, 0, 99) / 4.0);
    case ParamKind::Boolean: return uniform(rng, 0, 1) == 1;
    case ParamKind::Object: return Json{{"x", uniform(rng, 0, 9)}};
    case ParamKind::Array: return Json::array({uniform(rng, 0, 9)});
    case ParamKind::Any: return random_value(rng);
  }
  return nullptr;
}

}  // namespace

Json random_values_for(Rng& rng, const ParameterSchema& schema) {
  Json out = Json::object();
  for (const auto& p : schema.params) {
    const int roll = uniform(rng, 0, 9);
    if (roll == 0) continue;                      // omit
    if (roll == 1) {
      out[p.name] = random_value(rng);            // possibly wrong kind
    } else {
      out[p.name] = value_of_kind(rng, p.kind);
    }
  }
  if (uniform(rng, 0, 3) == 0) out["extra" + std::to_string(uniform(rng, 0, 9))] = random_value(rng);
  return out;
}

}  // namespace agentnet::testing
