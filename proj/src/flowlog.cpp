#include "agentnet/flowlog.hpp"

#include <algorithm>
#include <cstdlib>

#include "agentnet/error.hpp"
#include "agentnet/jsonl.hpp"

namespace agentnet {

namespace {

bool one_of(const std::string& s, std::initializer_list<const char*> options) {
  return std::any_of(options.begin(), options.end(), [&](const char* o) { return s == o; });
}

template <class T>
T field(const Json& j, const char* key) {
  if (!j.contains(key)) throw Error(Errc::InvalidRecord, std::string("missing field ") + key);
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception&) {
    throw Error(Errc::InvalidRecord, std::string("bad type for field ") + key);
  }
}

}  // namespace

Json to_json(const ChainEntry& e) {
  Json j{{"vertex_id", e.vertex_id},     {"vertex_kind", e.vertex_kind}, {"status", e.status},
         {"wall_time_ms", e.wall_time_ms}, {"token_cost", e.token_cost},   {"input_digest", e.input_digest}};
  j["route_kind_used"] = e.route_kind_used ? Json(*e.route_kind_used) : Json();
  return j;
}

Json to_json(const FlowRecord& r) {
  Json chain = Json::array();
  for (const auto& e : r.chain) chain.push_back(to_json(e));
  Json j{{"task_id", r.task_id},
         {"status", r.status},
         {"target", r.target},
         {"chain", std::move(chain)},
         {"chain_length", r.chain.size()},
         {"total_time_ms", r.total_time_ms},
         {"total_tokens", r.total_tokens},
         {"created_at", r.created_at},
         {"ended_at", r.ended_at},
         {"input_digest", r.input_digest},
         {"output_digest", r.output_digest}};
  j["failure_reason"] = r.failure_reason ? Json(*r.failure_reason) : Json();
  return j;
}

FlowRecord flow_record_from_json(const Json& j) {
  if (!j.is_object()) throw Error(Errc::InvalidRecord, "record is not an object");
  FlowRecord r;
  r.task_id = field<std::string>(j, "task_id");
  r.status = field<std::string>(j, "status");
  r.target = field<std::string>(j, "target");
  r.total_time_ms = field<std::int64_t>(j, "total_time_ms");
  r.total_tokens = field<std::int64_t>(j, "total_tokens");
  r.created_at = field<std::int64_t>(j, "created_at");
  r.ended_at = field<std::int64_t>(j, "ended_at");
  r.input_digest = field<std::string>(j, "input_digest");
  r.output_digest = field<std::string>(j, "output_digest");
  if (j.contains("failure_reason") && !j["failure_reason"].is_null()) {
    r.failure_reason = field<std::string>(j, "failure_reason");
  }
  const Json chain = j.value("chain", Json());
  if (!chain.is_array()) throw Error(Errc::InvalidRecord, "chain must be an array");
  for (const auto& item : chain) {
    if (!item.is_object()) throw Error(Errc::InvalidRecord, "chain entry is not an object");
    ChainEntry e;
    e.vertex_id = field<std::string>(item, "vertex_id");
    e.vertex_kind = field<std::string>(item, "vertex_kind");
    e.status = field<std::string>(item, "status");
    e.wall_time_ms = field<std::int64_t>(item, "wall_time_ms");
    e.token_cost = field<std::int64_t>(item, "token_cost");
    if (item.contains("route_kind_used") && !item["route_kind_used"].is_null()) {
      e.route_kind_used = field<std::string>(item, "route_kind_used");
    }
    e.input_digest = item.value("input_digest", std::string());
    r.chain.push_back(std::move(e));
  }
  if (j.contains("chain_length") && field<std::size_t>(j, "chain_length") != r.chain.size()) {
    throw Error(Errc::InvalidRecord, "chain_length disagrees with chain");
  }
  return r;
}

void validate_record(const FlowRecord& r) {
  if (r.task_id.empty()) throw Error(Errc::InvalidRecord, "empty task_id");
  if (!one_of(r.status, {"New", "Running", "Success", "Fail"})) {
    throw Error(Errc::InvalidRecord, "bad status " + r.status);
  }
  std::int64_t tokens = 0;
  std::int64_t time = 0;
  for (const auto& e : r.chain) {
    if (!one_of(e.vertex_kind, {"agent", "rpa", "group", "external"})) {
      throw Error(Errc::InvalidRecord, "bad vertex_kind " + e.vertex_kind);
    }
    if (!one_of(e.status, {"pending", "running", "success", "fail"})) {
      throw Error(Errc::InvalidRecord, "bad chain status " + e.status);
    }
    if (e.route_kind_used && !one_of(*e.route_kind_used, {"SEED", "HARD", "SOFT", "EXT"})) {
      throw Error(Errc::InvalidRecord, "bad route_kind_used " + *e.route_kind_used);
    }
    if (e.token_cost < 0 || e.wall_time_ms < 0) throw Error(Errc::InvalidRecord, "negative cost in chain");
    tokens += e.token_cost;
    time += e.wall_time_ms;
  }
  if (tokens != r.total_tokens) {
    throw Error(Errc::InvalidRecord,
                "total_tokens " + std::to_string(r.total_tokens) + " != chain sum " + std::to_string(tokens));
  }
  const std::int64_t tolerance = std::max<std::int64_t>(1, time / 20);
  if (std::llabs(time - r.total_time_ms) > tolerance) {
    throw Error(Errc::InvalidRecord,
                "total_time_ms " + std::to_string(r.total_time_ms) + " != chain sum " + std::to_string(time));
  }
}

FlowLogScan read_flow_log(const std::filesystem::path& path) {
  FlowLogScan scan;
  for (const auto& line : read_lines(path)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json j = Json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      ++scan.skipped;
      continue;
    }
    try {
      FlowRecord r = flow_record_from_json(j);
      validate_record(r);
      scan.records.push_back(std::move(r));
    } catch (const Error&) {
      ++scan.skipped;
    }
  }
  return scan;
}

void FlowLog::append(const FlowRecord& record) {
  validate_record(record);
  const std::string line = canonical_json(to_json(record));
  std::lock_guard lock(mutex_);
  append_line(path_, line);
}

}  // namespace agentnet
