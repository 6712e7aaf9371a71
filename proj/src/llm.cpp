#include "agentnet/llm.hpp"

#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "agentnet/error.hpp"

namespace agentnet {

namespace {

using Clock = std::chrono::steady_clock;

std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

}  // namespace

LlmSettings LlmSettings::from_env(LlmSettings base) {
  if (auto v = env("LLM_BASE_URL")) base.base_url = *v;
  if (auto v = env("LLM_API_KEY")) base.api_key = *v;
  if (auto v = env("LLM_MODEL")) base.model = *v;
  try {
    if (auto v = env("LLM_TIMEOUT_S")) base.timeout_s = std::stod(*v);
    if (auto v = env("LLM_MAX_CONCURRENCY")) base.max_concurrency = std::stoi(*v);
  } catch (const std::exception&) {
    throw Error(Errc::ConfigError, "LLM_TIMEOUT_S / LLM_MAX_CONCURRENCY must be numeric");
  }
  return base;
}

// ---------------------------------------------------------------------------

HttpChatTransport::HttpChatTransport(std::string base_url, std::string api_key)
    : api_key_(std::move(api_key)) {
  auto parts = split_url(base_url);
  if (!parts) throw Error(Errc::ConfigError, "LLM base URL must be absolute: " + base_url);
  origin_ = std::move(parts->first);
  path_ = parts->second;
  if (path_.empty() || path_.back() != '/') path_ += '/';
  path_ += "chat/completions";
}

ChatReply HttpChatTransport::post(const Json& request, std::chrono::milliseconds timeout) {
  httplib::Client cli(origin_);
  const auto sec = static_cast<time_t>(timeout.count() / 1000);
  const auto usec = static_cast<time_t>((timeout.count() % 1000) * 1000);
  cli.set_connection_timeout(sec, usec);
  cli.set_read_timeout(sec, usec);
  cli.set_write_timeout(sec, usec);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  const auto start = Clock::now();
  auto res = cli.Post(path_, headers, request.dump(), "application/json");
  if (!res) {
    if (Clock::now() - start >= timeout - std::chrono::milliseconds(50)) {
      throw Error(Errc::ExecutorTimeout, "chat completion timed out");
    }
    throw Error(Errc::ApiError, httplib::to_string(res.error()));
  }
  return {res->status, res->body};
}

// ---------------------------------------------------------------------------

PromptSource PromptSource::from(const AgentRole& role) {
  return {role.name, role.description, role.system_prompt, role.output_schema};
}

PromptSource PromptSource::from(const AgentGroup& group) {
  return {group.name, group.goal_description, group.group_prompt, group.output_schema};
}

std::string render_user_message(const PromptSource& src, const Json& ctx) {
  std::string out;
  out += "Role: " + src.name + "\n";
  out += "Description: " + src.description + "\n\n";
  out += "Produce a JSON object with these output parameters:\n";
  for (const auto& p : src.output_schema.params) {
    out += "- " + p.name + " (" + std::string(to_string(p.kind)) + ", " +
           (p.required ? "required" : "optional") + "): " + p.description + "\n";
  }
  out += "\nInput context (JSON):\n" + canonical_json(ctx) + "\n\n";
  out += "Reply with the JSON object only.";
  return out;
}

Json build_chat_request(const PromptSource& src, const Json& ctx, const std::string& model,
                        double temperature) {
  return Json{{"model", model},
              {"messages",
               Json::array({Json{{"role", "system"}, {"content", src.system_prompt}},
                            Json{{"role", "user"}, {"content", render_user_message(src, ctx)}}})},
              {"temperature", temperature}};
}

std::optional<Json> extract_json_object(std::string_view text) {
  for (std::size_t start = text.find('{'); start != std::string_view::npos;
       start = text.find('{', start + 1)) {
    int depth = 0;
    bool in_string = false;
    for (std::size_t i = start; i < text.size(); ++i) {
      const char c = text[i];
      if (in_string) {
        if (c == '\\') {
          ++i;
        } else if (c == '"') {
          in_string = false;
        }
        continue;
      }
      if (c == '"') {
        in_string = true;
      } else if (c == '{') {
        ++depth;
      } else if (c == '}' && --depth == 0) {
        Json parsed = Json::parse(text.substr(start, i - start + 1), nullptr, false);
        if (!parsed.is_discarded() && parsed.is_object()) return parsed;
        break;
      }
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

void ConcurrencyGate::acquire() {
  std::unique_lock lock(mutex_);
  cv_.wait(lock, [&] { return active_ < limit_; });
  ++active_;
  peak_ = std::max(peak_, active_);
}

void ConcurrencyGate::release() {
  {
    std::lock_guard lock(mutex_);
    --active_;
  }
  cv_.notify_one();
}

int ConcurrencyGate::peak() const {
  std::lock_guard lock(mutex_);
  return peak_;
}

LlmExecutor::LlmExecutor(LlmSettings settings, std::shared_ptr<ChatTransport> transport, Sleeper sleeper)
    : settings_(std::move(settings)),
      transport_(std::move(transport)),
      sleeper_(sleeper ? std::move(sleeper) : Sleeper([](auto d) { std::this_thread::sleep_for(d); })),
      gate_(settings_.max_concurrency) {
  if (!transport_) throw Error(Errc::ConfigError, "LLM executor needs a transport");
}

LlmExecutor::Completion LlmExecutor::complete(const Json& request, Clock::time_point deadline,
                                              std::string& trace) {
  for (int attempt = 0;; ++attempt) {
    const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
    if (remaining.count() <= 0) throw Error(Errc::ExecutorTimeout, "LLM deadline exhausted");

    std::string failure;
    try {
      gate_.acquire();
      ChatReply reply;
      try {
        reply = transport_->post(request, remaining);
      } catch (...) {
        gate_.release();
        throw;
      }
      gate_.release();

      if (reply.status < 200 || reply.status >= 300) {
        failure = "HTTP " + std::to_string(reply.status);
      } else {
        Json body = Json::parse(reply.body, nullptr, false);
        std::optional<std::string> content;
        if (!body.is_discarded() && body.contains("choices") && body["choices"].is_array() &&
            !body["choices"].empty()) {
          const Json msg = body["choices"][0].value("message", Json::object());
          if (msg.contains("content") && msg["content"].is_string()) content = msg["content"].get<std::string>();
        }
        if (!content) {
          failure = "malformed completion body";
        } else {
          Completion c;
          c.content = std::move(*content);
          const Json usage = body.value("usage", Json::object());
          if (usage.contains("prompt_tokens") && usage.contains("completion_tokens")) {
            c.tokens = usage["prompt_tokens"].get<std::int64_t>() + usage["completion_tokens"].get<std::int64_t>();
          } else {
            std::size_t chars = c.content.size();
            for (const auto& m : request["messages"]) chars += m["content"].get<std::string>().size();
            c.tokens = static_cast<std::int64_t>(chars / 4);
          }
          trace += c.content;
          trace += "\n";
          return c;
        }
      }
    } catch (const Error& e) {
      if (e.code() != Errc::ApiError) throw;
      failure = e.what();
    }

    if (attempt >= kMaxRetries) throw Error(Errc::ApiError, failure);
    const auto backoff = std::chrono::milliseconds(1000LL << attempt);
    spdlog::warn("LLM request failed ({}); retrying in {} ms", failure, backoff.count());
    sleeper_(backoff);
  }
}

ExecutionResult LlmExecutor::run(const PromptSource& src, const Json& ctx, const ExecOptions& opts,
                                 std::string_view model_hint) {
  const auto start = Clock::now();
  auto limit = std::chrono::milliseconds(static_cast<std::int64_t>(settings_.timeout_s * 1000.0));
  if (opts.time_limit && *opts.time_limit < limit) limit = *opts.time_limit;
  const auto deadline = start + limit;

  const std::string model = model_hint.empty() ? settings_.model : std::string(model_hint);
  Json request = build_chat_request(src, ctx, model, settings_.temperature);

  ExecutionResult result;
  std::string trace;
  for (int reprompt = 0;; ++reprompt) {
    Completion c = complete(request, deadline, trace);
    result.token_cost += c.tokens;
    if (auto parsed = extract_json_object(c.content)) {
      result.output = std::move(*parsed);
      break;
    }
    if (reprompt >= kMaxReprompts) {
      result.raw_trace = trace;
      throw Error(Errc::ParseError, "no JSON object in model reply after " + std::to_string(reprompt) + " reprompt(s)");
    }
    request["messages"].push_back(
        {{"role", "user"},
         {"content", "Your previous reply could not be parsed: no JSON object was found. "
                     "Reply with a single JSON object containing the declared output parameters."}});
  }
  result.raw_trace = std::move(trace);
  result.wall_time_ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start).count();
  return result;
}

}  // namespace agentnet
