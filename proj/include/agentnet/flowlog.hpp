#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "agentnet/text.hpp"

namespace agentnet {

struct ChainEntry {
  std::string vertex_id;
  std::string vertex_kind;  // agent | rpa | group | external
  std::string status;       // pending | running | success | fail
  std::int64_t wall_time_ms = 0;
  std::int64_t token_cost = 0;
  std::optional<std::string> route_kind_used;  // SEED | HARD | SOFT | EXT
  /// Canonical JSON of the invocation's input values.
  std::string input_digest;

  bool operator==(const ChainEntry&) const = default;
};

struct FlowRecord {
  std::string task_id;
  std::string status;  // New | Running | Success | Fail
  std::string target;
  std::vector<ChainEntry> chain;
  std::int64_t total_time_ms = 0;
  std::int64_t total_tokens = 0;
  std::int64_t created_at = 0;
  std::int64_t ended_at = 0;
  std::string input_digest;
  std::string output_digest;
  std::optional<std::string> failure_reason;

  std::size_t chain_length() const noexcept { return chain.size(); }
  bool operator==(const FlowRecord&) const = default;
};

Json to_json(const ChainEntry& e);
Json to_json(const FlowRecord& r);
/// Throws Error(InvalidRecord) when fields are missing or mistyped.
FlowRecord flow_record_from_json(const Json& j);

/// Field-domain checks plus totals: tokens must equal the chain sum exactly,
/// time within max(1 ms, 5%). Throws Error(InvalidRecord).
void validate_record(const FlowRecord& r);

struct FlowLogScan {
  std::vector<FlowRecord> records;
  std::size_t skipped = 0;
};

/// Point-in-time read; malformed or invalid lines are counted and skipped.
/// A missing file reads as empty.
FlowLogScan read_flow_log(const std::filesystem::path& path);

/// Append-only JSONL sink. One instance per file; appends are serialized.
class FlowLog {
 public:
  explicit FlowLog(std::filesystem::path path) : path_(std::move(path)) {}

  void append(const FlowRecord& record);
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
  std::mutex mutex_;
};

}  // namespace agentnet
