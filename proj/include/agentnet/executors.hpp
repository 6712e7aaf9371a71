#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "agentnet/network.hpp"

namespace agentnet {

struct ExecutionResult {
  Json output = Json::object();  // produced values; provenance is stamped by the scheduler
  std::int64_t token_cost = 0;
  std::int64_t wall_time_ms = 0;
  std::optional<std::string> raw_trace;
};

struct ExecOptions {
  /// Upper bound imposed by the caller (e.g. the remaining task deadline);
  /// the effective timeout is the smaller of this and the binding's own.
  std::optional<std::chrono::milliseconds> time_limit;
};

/// Deterministic transforms used for tests and simple glue:
///   identity | rename:<a>:<b> | const:<name>:<json> | concat:<a>:<b>:<out>
///   | fail | sleep:<ms>
/// rename/const/concat emit only the key they produce.
ExecutionResult exec_builtin(std::string_view transform_id, const Json& ctx,
                             const ExecOptions& opts = {});

/// Runs argv with ctx as JSON on stdin and parses stdout as a JSON object.
ExecutionResult exec_command(const std::vector<std::string>& argv, const Json& ctx, double timeout_s);

/// POSTs ctx as JSON; a 2xx JSON-object body becomes the output.
ExecutionResult exec_http(const std::string& endpoint_url, const Json& ctx, double timeout_s);

/// Splits "scheme://host[:port]/path?q" into ("scheme://host[:port]", "/path?q"); an empty path becomes "/".
/// Returns nullopt for anything that is not an absolute http(s) URL.
std::optional<std::pair<std::string, std::string>> split_url(std::string_view url);

class LlmExecutor;

/// Maps a vertex to the executor realizing its logic binding.
class ExecutorBackend {
 public:
  virtual ~ExecutorBackend() = default;
  virtual ExecutionResult execute(const Vertex& v, const Json& ctx, const ExecOptions& opts) = 0;
};

class DefaultExecutorBackend : public ExecutorBackend {
 public:
  explicit DefaultExecutorBackend(std::shared_ptr<LlmExecutor> llm = nullptr,
                                  double external_timeout_s = 30.0)
      : llm_(std::move(llm)), external_timeout_s_(external_timeout_s) {}

  ExecutionResult execute(const Vertex& v, const Json& ctx, const ExecOptions& opts) override;

 private:
  std::shared_ptr<LlmExecutor> llm_;
  double external_timeout_s_;
};

}  // namespace agentnet
