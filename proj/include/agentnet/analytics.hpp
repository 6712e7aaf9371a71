#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "agentnet/flowlog.hpp"
#include "agentnet/network.hpp"

namespace agentnet {

// Task perspective: one row per task status.
struct StatusRow {
  std::string status;
  std::size_t count = 0;
  double pct = 0.0;
  double avg_chain_len = 0.0;
  double avg_time_s = 0.0;
  double avg_tokens = 0.0;
};

// Subtask scale: chain entries of one vertex kind, bucketed by status.
// A pending entry was planned but never started and counts as New.
struct SubtaskRow {
  std::string kind;
  std::size_t total = 0;
  std::size_t new_count = 0;
  std::size_t running = 0;
  std::size_t success = 0;
  std::size_t fail = 0;
};

// Protocol perspective: executed (success or fail) entries of one kind.
struct ProtocolRow {
  std::string kind;
  std::size_t invocations = 0;
  double avg_time_s = 0.0;
  std::optional<double> avg_tokens;  // absent for rpa
  double success_rate = 0.0;         // percent
};

struct StatsReport {
  std::size_t records = 0;
  std::size_t skipped = 0;
  std::vector<StatusRow> statuses;      // New, Running, Success, Fail
  std::vector<SubtaskRow> subtasks;     // agent, rpa, group, external
  std::vector<ProtocolRow> protocols;   // agent, rpa, group, external
};

StatsReport compute_stats(std::span<const FlowRecord> records, std::size_t skipped = 0);

struct VertexRow {
  std::string vertex_id;
  std::string vertex_kind;
  std::size_t invocations = 0;
  std::size_t successes = 0;
  double avg_time_s = 0.0;
  std::optional<double> avg_tokens;
  double success_rate = 0.0;  // percent
};

struct VertexStats {
  std::vector<VertexRow> rows;  // by vertex id
  /// (vertex id, invocations), most invoked first; ties by id.
  std::vector<std::pair<std::string, std::size_t>> histogram;
};

VertexStats compute_vertex_stats(std::span<const FlowRecord> records);

using Similarity = std::function<double(std::string_view, std::string_view)>;

/// Token Jaccard of two texts.
double text_jaccard(std::string_view a, std::string_view b);

/// Mean similarity between each invocation input and its task's final
/// output, over Success records only.
std::map<std::string, double> contribution(std::span<const FlowRecord> records,
                                           const Similarity& similarity = text_jaccard);

struct MinedRoute {
  Route route;
  double support = 0.0;
  double lift = 0.0;
  std::size_t success_count = 0;
};

/// Adjacent pairs that recur in successful chains, as HARD routes ranked by
/// support. Pairs already present as HARD routes in `existing` are skipped.
std::vector<MinedRoute> mine_hard_routes(std::span<const FlowRecord> records, double min_support,
                                         double min_lift = 1.0, const std::vector<Route>& existing = {});

Json to_json(const StatsReport& r);
Json to_json(const VertexStats& v);
Json to_json(const MinedRoute& m);

/// Plain-text tables "Overview of Tasks", "Scale of Subtasks" and
/// "Protocol of Vertexes".
std::string render_tables(const StatsReport& r);

}  // namespace agentnet
