#pragma once

#include <chrono>
#include <condition_variable>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include "agentnet/executors.hpp"

namespace agentnet {

struct LlmSettings {
  std::string base_url;  // e.g. http://localhost:8000/v1
  std::string api_key;
  std::string model;
  double timeout_s = 60.0;
  int max_concurrency = 4;
  double temperature = 0.2;

  /// LLM_BASE_URL, LLM_API_KEY, LLM_MODEL, LLM_TIMEOUT_S, LLM_MAX_CONCURRENCY
  /// override the fields of `base`.
  static LlmSettings from_env(LlmSettings base);
  static LlmSettings from_env() { return from_env(LlmSettings()); }
};

struct ChatReply {
  int status = 0;
  std::string body;
};

/// One chat-completion round trip. Implementations throw
/// Error(ExecutorTimeout) when the deadline passes and Error(ApiError) when
/// no HTTP reply was obtained.
class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  virtual ChatReply post(const Json& request, std::chrono::milliseconds timeout) = 0;
};

/// OpenAI-compatible `POST {base_url}/chat/completions`.
class HttpChatTransport final : public ChatTransport {
 public:
  HttpChatTransport(std::string base_url, std::string api_key);
  ChatReply post(const Json& request, std::chrono::milliseconds timeout) override;

 private:
  std::string origin_;
  std::string path_;
  std::string api_key_;
};

/// The parts of an agent (or group header) that shape its prompt.
struct PromptSource {
  std::string name;
  std::string description;
  std::string system_prompt;
  ParameterSchema output_schema;

  static PromptSource from(const AgentRole& role);
  static PromptSource from(const AgentGroup& group);
};

std::string render_user_message(const PromptSource& src, const Json& ctx);
Json build_chat_request(const PromptSource& src, const Json& ctx, const std::string& model,
                        double temperature);

/// First top-level JSON object embedded in `text`, skipping prose and code
/// fences around it.
std::optional<Json> extract_json_object(std::string_view text);

/// Counting gate for outbound requests.
class ConcurrencyGate {
 public:
  explicit ConcurrencyGate(int limit) : limit_(limit < 1 ? 1 : limit) {}

  void acquire();
  void release();
  int peak() const;

 private:
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  int limit_;
  int active_ = 0;
  int peak_ = 0;
};

class LlmExecutor {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  static constexpr int kMaxRetries = 2;
  static constexpr int kMaxReprompts = 1;

  LlmExecutor(LlmSettings settings, std::shared_ptr<ChatTransport> transport, Sleeper sleeper = {});

  ExecutionResult run(const PromptSource& src, const Json& ctx, const ExecOptions& opts = {},
                      std::string_view model_hint = {});

  const LlmSettings& settings() const noexcept { return settings_; }
  const ConcurrencyGate& gate() const noexcept { return gate_; }

 private:
  struct Completion {
    std::string content;
    std::int64_t tokens = 0;
  };
  Completion complete(const Json& request, std::chrono::steady_clock::time_point deadline,
                      std::string& trace);

  LlmSettings settings_;
  std::shared_ptr<ChatTransport> transport_;
  Sleeper sleeper_;
  ConcurrencyGate gate_;
};

}  // namespace agentnet
