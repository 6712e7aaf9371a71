#include "agentnet/executors.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>
#include <mutex>
#include <thread>

#include <httplib.h>

#include "agentnet/error.hpp"
#include "agentnet/llm.hpp"

namespace agentnet {

namespace {

using Clock = std::chrono::steady_clock;

std::int64_t elapsed_ms(Clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start).count();
}

std::vector<std::string_view> split_colon(std::string_view s, std::size_t max_parts) {
  std::vector<std::string_view> parts;
  while (parts.size() + 1 < max_parts) {
    auto pos = s.find(':');
    if (pos == std::string_view::npos) break;
    parts.push_back(s.substr(0, pos));
    s.remove_prefix(pos + 1);
  }
  parts.push_back(s);
  return parts;
}

const Json& require_key(const Json& ctx, std::string_view key, std::string_view transform) {
  if (!ctx.is_object()) throw Error(Errc::ExecutorError, std::string(transform) + ": context is not an object");
  auto it = ctx.find(key);
  if (it == ctx.end()) {
    throw Error(Errc::ExecutorError, std::string(transform) + ": missing key '" + std::string(key) + "'");
  }
  return *it;
}

std::chrono::milliseconds effective_timeout(double timeout_s, const ExecOptions& opts) {
  auto own = std::chrono::milliseconds(static_cast<std::int64_t>(timeout_s * 1000.0));
  if (opts.time_limit && *opts.time_limit < own) own = *opts.time_limit;
  return std::max(own, std::chrono::milliseconds(1));
}

}  // namespace

ExecutionResult exec_builtin(std::string_view transform_id, const Json& ctx, const ExecOptions& opts) {
  const auto start = Clock::now();
  ExecutionResult result;
  const auto op_end = transform_id.find(':');
  const std::string_view op = transform_id.substr(0, op_end);
  const std::string_view args = op_end == std::string_view::npos ? std::string_view{} : transform_id.substr(op_end + 1);

  if (op == "identity" && op_end == std::string_view::npos) {
    result.output = ctx.is_object() ? ctx : Json::object();
  } else if (op == "rename") {
    auto parts = split_colon(args, 2);
    if (parts.size() != 2 || parts[0].empty() || parts[1].empty()) {
      throw Error(Errc::UnknownTransform, std::string(transform_id));
    }
    result.output = Json::object();
    result.output[std::string(parts[1])] = require_key(ctx, parts[0], transform_id);
  } else if (op == "const") {
    auto parts = split_colon(args, 2);
    if (parts.size() != 2 || parts[0].empty()) throw Error(Errc::UnknownTransform, std::string(transform_id));
    Json value = Json::parse(parts[1], nullptr, false);
    if (value.is_discarded()) throw Error(Errc::UnknownTransform, std::string(transform_id) + ": bad JSON literal");
    result.output = Json::object();
    result.output[std::string(parts[0])] = std::move(value);
  } else if (op == "concat") {
    auto parts = split_colon(args, 3);
    if (parts.size() != 3 || parts[0].empty() || parts[1].empty() || parts[2].empty()) {
      throw Error(Errc::UnknownTransform, std::string(transform_id));
    }
    const Json& a = require_key(ctx, parts[0], transform_id);
    const Json& b = require_key(ctx, parts[1], transform_id);
    if (!a.is_string() || !b.is_string()) {
      throw Error(Errc::ExecutorError, std::string(transform_id) + ": operands must be strings");
    }
    result.output = Json::object();
    result.output[std::string(parts[2])] = a.get<std::string>() + b.get<std::string>();
  } else if (op == "fail" && op_end == std::string_view::npos) {
    throw Error(Errc::ExecutorError, "builtin fail");
  } else if (op == "sleep") {
    std::int64_t ms = 0;
    auto [ptr, ec] = std::from_chars(args.data(), args.data() + args.size(), ms);
    if (ec != std::errc() || ptr != args.data() + args.size() || ms < 0) {
      throw Error(Errc::UnknownTransform, std::string(transform_id));
    }
    const auto wanted = std::chrono::milliseconds(ms);
    if (opts.time_limit && *opts.time_limit < wanted) {
      std::this_thread::sleep_for(*opts.time_limit);
      throw Error(Errc::ExecutorTimeout, std::string(transform_id));
    }
    std::this_thread::sleep_for(wanted);
    result.output = ctx.is_object() ? ctx : Json::object();
  } else {
    throw Error(Errc::UnknownTransform, std::string(transform_id));
  }
  result.wall_time_ms = elapsed_ms(start);
  return result;
}

// ---------------------------------------------------------------------------
// Commands.

namespace {

void ignore_sigpipe_once() {
  static std::once_flag flag;
  std::call_once(flag, [] { ::signal(SIGPIPE, SIG_IGN); });
}

struct Pipe {
  int fds[2] = {-1, -1};
  Pipe() {
    if (::pipe2(fds, O_CLOEXEC) != 0) throw Error(Errc::ExecutorError, std::string("pipe: ") + std::strerror(errno));
  }
  ~Pipe() {
    close_read();
    close_write();
  }
  Pipe(const Pipe&) = delete;
  Pipe& operator=(const Pipe&) = delete;
  void close_read() {
    if (fds[0] >= 0) ::close(fds[0]);
    fds[0] = -1;
  }
  void close_write() {
    if (fds[1] >= 0) ::close(fds[1]);
    fds[1] = -1;
  }
};

}  // namespace

ExecutionResult exec_command(const std::vector<std::string>& argv, const Json& ctx, double timeout_s) {
  if (argv.empty()) throw Error(Errc::ExecutorError, "empty argv");
  if (!(timeout_s > 0)) throw Error(Errc::ExecutorError, "timeout_s must be positive");
  ignore_sigpipe_once();

  const auto start = Clock::now();
  const auto deadline = start + std::chrono::milliseconds(static_cast<std::int64_t>(timeout_s * 1000.0));
  const std::string input = canonical_json(ctx);

  std::vector<char*> cargv;
  cargv.reserve(argv.size() + 1);
  for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
  cargv.push_back(nullptr);

  Pipe in, out, err;
  const pid_t pid = ::fork();
  if (pid < 0) throw Error(Errc::ExecutorError, std::string("fork: ") + std::strerror(errno));
  if (pid == 0) {
    ::dup2(in.fds[0], STDIN_FILENO);
    ::dup2(out.fds[1], STDOUT_FILENO);
    ::dup2(err.fds[1], STDERR_FILENO);
    ::execvp(cargv[0], cargv.data());
    _exit(127);
  }
  in.close_read();
  out.close_write();
  err.close_write();
  ::fcntl(in.fds[1], F_SETFL, O_NONBLOCK);

  std::string stdout_text, stderr_text;
  std::size_t written = 0;
  if (input.empty()) in.close_write();
  bool out_open = true, err_open = true;
  char buf[4096];

  while (out_open || err_open) {
    const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
    if (remaining <= 0) {
      ::kill(pid, SIGKILL);
      ::waitpid(pid, nullptr, 0);
      throw Error(Errc::ExecutorTimeout, argv.front() + " exceeded " + std::to_string(timeout_s) + " s");
    }
    pollfd fds[3];
    nfds_t n = 0;
    int out_idx = -1, err_idx = -1, in_idx = -1;
    if (out_open) { fds[n] = {out.fds[0], POLLIN, 0}; out_idx = static_cast<int>(n++); }
    if (err_open) { fds[n] = {err.fds[0], POLLIN, 0}; err_idx = static_cast<int>(n++); }
    if (in.fds[1] >= 0) { fds[n] = {in.fds[1], POLLOUT, 0}; in_idx = static_cast<int>(n++); }
    const int rc = ::poll(fds, n, static_cast<int>(std::min<std::int64_t>(remaining, 1000)));
    if (rc < 0) {
      if (errno == EINTR) continue;
      ::kill(pid, SIGKILL);
      ::waitpid(pid, nullptr, 0);
      throw Error(Errc::ExecutorError, std::string("poll: ") + std::strerror(errno));
    }
    if (in_idx >= 0 && (fds[in_idx].revents & (POLLOUT | POLLERR | POLLHUP)) != 0) {
      const ssize_t w = ::write(in.fds[1], input.data() + written, input.size() - written);
      if (w > 0) written += static_cast<std::size_t>(w);
      if (w < 0 && errno != EAGAIN && errno != EINTR) written = input.size();  // child closed stdin
      if (written >= input.size()) in.close_write();
    }
    auto drain = [&](int idx, int fd, std::string& sink, bool& open) {
      if (idx < 0 || (fds[idx].revents & (POLLIN | POLLHUP | POLLERR)) == 0) return;
      const ssize_t r = ::read(fd, buf, sizeof buf);
      if (r > 0) {
        sink.append(buf, static_cast<std::size_t>(r));
      } else if (r == 0 || (errno != EAGAIN && errno != EINTR)) {
        open = false;
      }
    };
    drain(out_idx, out.fds[0], stdout_text, out_open);
    drain(err_idx, err.fds[0], stderr_text, err_open);
  }
  in.close_write();

  int status = 0;
  while (true) {
    const pid_t w = ::waitpid(pid, &status, WNOHANG);
    if (w == pid) break;
    if (w < 0 && errno != EINTR) break;
    if (Clock::now() >= deadline) {
      ::kill(pid, SIGKILL);
      ::waitpid(pid, nullptr, 0);
      throw Error(Errc::ExecutorTimeout, argv.front() + " exceeded " + std::to_string(timeout_s) + " s");
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }

  ExecutionResult result;
  result.wall_time_ms = elapsed_ms(start);
  result.raw_trace = stdout_text;
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    const int code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
    throw Error(Errc::ExecutorError, argv.front() + " exited with " + std::to_string(code) + ": " + stderr_text);
  }
  Json parsed = Json::parse(stdout_text, nullptr, false);
  if (parsed.is_discarded() || !parsed.is_object()) {
    throw Error(Errc::OutputNotJson, argv.front() + " printed: " + stdout_text.substr(0, 200));
  }
  result.output = std::move(parsed);
  return result;
}

// ---------------------------------------------------------------------------
// HTTP.

std::optional<std::pair<std::string, std::string>> split_url(std::string_view url) {
  std::size_t scheme_len = 0;
  if (url.starts_with("http://")) {
    scheme_len = 7;
  } else if (url.starts_with("https://")) {
    scheme_len = 8;
  } else {
    return std::nullopt;
  }
  const auto path_pos = url.find('/', scheme_len);
  std::string origin(url.substr(0, path_pos));
  std::string path = path_pos == std::string_view::npos ? "/" : std::string(url.substr(path_pos));
  if (origin.size() == scheme_len) return std::nullopt;
  return std::make_pair(std::move(origin), std::move(path));
}

namespace {

void set_timeouts(httplib::Client& cli, std::chrono::milliseconds t) {
  const auto sec = static_cast<time_t>(t.count() / 1000);
  const auto usec = static_cast<time_t>((t.count() % 1000) * 1000);
  cli.set_connection_timeout(sec, usec);
  cli.set_read_timeout(sec, usec);
  cli.set_write_timeout(sec, usec);
}

}  // namespace

ExecutionResult exec_http(const std::string& endpoint_url, const Json& ctx, double timeout_s) {
  auto parts = split_url(endpoint_url);
  if (!parts) throw Error(Errc::ExecutorError, "not an absolute http(s) URL: " + endpoint_url);
  if (!(timeout_s > 0)) throw Error(Errc::ExecutorError, "timeout_s must be positive");

  const auto timeout = std::chrono::milliseconds(static_cast<std::int64_t>(timeout_s * 1000.0));
  const auto start = Clock::now();
  httplib::Client cli(parts->first);
  set_timeouts(cli, timeout);
  auto res = cli.Post(parts->second, canonical_json(ctx), "application/json");

  ExecutionResult result;
  result.wall_time_ms = elapsed_ms(start);
  if (!res) {
    // Read/connect timeouts surface as generic transport errors; classify by
    // elapsed time.
    if (std::chrono::milliseconds(result.wall_time_ms) >= timeout - std::chrono::milliseconds(50)) {
      throw Error(Errc::ExecutorTimeout, endpoint_url);
    }
    throw Error(Errc::ExecutorError, endpoint_url + ": " + httplib::to_string(res.error()));
  }
  result.raw_trace = res->body;
  if (res->status < 200 || res->status >= 300) {
    throw Error(Errc::ExecutorError, endpoint_url + " returned " + std::to_string(res->status));
  }
  Json parsed = Json::parse(res->body, nullptr, false);
  if (parsed.is_discarded() || !parsed.is_object()) throw Error(Errc::OutputNotJson, endpoint_url);
  result.output = std::move(parsed);
  return result;
}

// ---------------------------------------------------------------------------

ExecutionResult DefaultExecutorBackend::execute(const Vertex& v, const Json& ctx, const ExecOptions& opts) {
  if (const auto* agent = v.agent()) {
    const auto& logic = agent->logic;
    if (const auto* b = std::get_if<BuiltinLogic>(&logic)) return exec_builtin(b->transform_id, ctx, opts);
    if (const auto* c = std::get_if<CommandLogic>(&logic)) {
      return exec_command(c->argv, ctx, effective_timeout(c->timeout_s, opts).count() / 1000.0);
    }
    if (const auto* h = std::get_if<HttpLogic>(&logic)) {
      return exec_http(h->endpoint_url, ctx, effective_timeout(h->timeout_s, opts).count() / 1000.0);
    }
    if (!llm_) throw Error(Errc::ExecutorError, v.id + ": no LLM endpoint configured");
    return llm_->run(PromptSource::from(*agent), ctx, opts, std::get<LlmLogic>(logic).model_hint);
  }
  if (const auto* ext = v.external()) {
    if (ext->endpoint_url.empty()) throw Error(Errc::ExecutorError, v.id + ": external vertex without endpoint");
    return exec_http(ext->endpoint_url, ctx, effective_timeout(external_timeout_s_, opts).count() / 1000.0);
  }
  throw Error(Errc::ExecutorError, v.id + ": groups are executed by the scheduler");
}

}  // namespace agentnet
