#include <doctest.h>

#include <httplib.h>

#include <thread>

#include "agentnet/error.hpp"
#include "agentnet/executors.hpp"
#include "fixtures.hpp"

using namespace agentnet;

namespace {

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an agentnet::Error");
  return Errc::IoError;
}

class EchoServer {
 public:
  EchoServer() {
    server_.Post("/echo", [](const httplib::Request& req, httplib::Response& res) {
      Json in = Json::parse(req.body);
      res.set_content(Json{{"echo", in}}.dump(), "application/json");
    });
    server_.Post("/boom", [](const httplib::Request&, httplib::Response& res) {
      res.status = 500;
      res.set_content("{}", "application/json");
    });
    server_.Post("/text", [](const httplib::Request&, httplib::Response& res) { res.set_content("hello", "text/plain"); });
    server_.Post("/hang", [](const httplib::Request&, httplib::Response& res) {
      std::this_thread::sleep_for(std::chrono::milliseconds(1500));
      res.set_content("{}", "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~EchoServer() {
    server_.stop();
    thread_.join();
  }
  std::string url(const std::string& path) const { return "http://127.0.0.1:" + std::to_string(port_) + path; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace

TEST_CASE("builtin transforms") {
  const Json ctx{{"a", "x"}, {"b", "y"}};
  CHECK(exec_builtin("identity", ctx).output == ctx);
  CHECK(exec_builtin("rename:a:c", ctx).output == Json{{"c", "x"}});
  CHECK(exec_builtin("const:n:[1,2]", ctx).output == Json{{"n", {1, 2}}});
  CHECK(exec_builtin("concat:a:b:ab", ctx).output == Json{{"ab", "xy"}});
  CHECK(exec_builtin("sleep:5", ctx).output == ctx);

  CHECK(code_of([&] { exec_builtin("fail", ctx); }) == Errc::ExecutorError);
  CHECK(code_of([&] { exec_builtin("rename:zz:c", ctx); }) == Errc::ExecutorError);
  CHECK(code_of([&] { exec_builtin("concat:a:b", ctx); }) == Errc::UnknownTransform);
  CHECK(code_of([&] { exec_builtin("const:n:{bad", ctx); }) == Errc::UnknownTransform);
  CHECK(code_of([&] { exec_builtin("teleport", ctx); }) == Errc::UnknownTransform);
  CHECK(code_of([&] { exec_builtin("sleep:500", ctx, {std::chrono::milliseconds(20)}); }) == Errc::ExecutorTimeout);
}

TEST_CASE("builtins are pure and leave the input alone") {
  const Json ctx{{"a", "x"}, {"b", "y"}};
  const Json copy = ctx;
  for (const char* t : {"identity", "rename:a:c", "concat:a:b:ab", "const:k:1"}) {
    CAPTURE(t);
    CHECK(exec_builtin(t, ctx).output == exec_builtin(t, ctx).output);
    CHECK(ctx == copy);
  }
}

TEST_CASE("command executor") {
  const Json ctx{{"task", "add"}, {"n", 2}};
  auto r = exec_command({"cat"}, ctx, 5);
  CHECK(r.output == ctx);
  CHECK(r.token_cost == 0);

  auto py = exec_command({"sh", "-c", "cat >/dev/null; echo '{\"code\": \"print(1)\"}'"}, ctx, 5);
  CHECK(py.output == Json{{"code", "print(1)"}});

  CHECK(code_of([&] { exec_command({"sh", "-c", "exit 1"}, ctx, 5); }) == Errc::ExecutorError);
  CHECK(code_of([&] { exec_command({"echo", "notjson"}, ctx, 5); }) == Errc::OutputNotJson);
  CHECK(code_of([&] { exec_command({"sh", "-c", "echo '[1]'"}, ctx, 5); }) == Errc::OutputNotJson);
  CHECK(code_of([&] { exec_command({"/nonexistent/bin"}, ctx, 5); }) == Errc::ExecutorError);

  const auto start = std::chrono::steady_clock::now();
  CHECK(code_of([&] { exec_command({"sleep", "5"}, ctx, 0.2); }) == Errc::ExecutorTimeout);
  CHECK(std::chrono::steady_clock::now() - start < std::chrono::seconds(3));
}

TEST_CASE("http executor") {
  EchoServer server;
  const Json ctx{{"q", "hi"}};
  CHECK(exec_http(server.url("/echo"), ctx, 5).output == Json{{"echo", ctx}});
  CHECK(code_of([&] { exec_http(server.url("/boom"), ctx, 5); }) == Errc::ExecutorError);
  CHECK(code_of([&] { exec_http(server.url("/text"), ctx, 5); }) == Errc::OutputNotJson);
  CHECK(code_of([&] { exec_http(server.url("/hang"), ctx, 0.3); }) == Errc::ExecutorTimeout);
  CHECK(code_of([&] { exec_http("not a url", ctx, 5); }) == Errc::ExecutorError);
}

TEST_CASE("split_url") {
  auto p = split_url("http://localhost:8000/v1?x=1");
  REQUIRE(p);
  CHECK(p->first == "http://localhost:8000");
  CHECK(p->second == "/v1?x=1");
  CHECK(split_url("https://example.org")->second == "/");
  CHECK_FALSE(split_url("ftp://x/y"));
  CHECK_FALSE(split_url("/relative"));
}

TEST_CASE("default backend dispatches by binding") {
  DefaultExecutorBackend backend;
  auto v = testing::agent("cat", {"x"}, {"x"}, CommandLogic{{"cat"}, 5});
  CHECK(backend.execute(v, Json{{"x", 1}}, {}).output == Json{{"x", 1}});

  auto llm = testing::agent("writer", {}, {"text"}, LlmLogic{});
  CHECK(code_of([&] { backend.execute(llm, Json::object(), {}); }) == Errc::ExecutorError);
  auto g = testing::group("g", {"cat"}, {}, {});
  CHECK(code_of([&] { backend.execute(g, Json::object(), {}); }) == Errc::ExecutorError);

  EchoServer server;
  Vertex ext{"rpa", ExternalDescriptor{"rpa", "", {}, {}, ProtocolTag::Rpa, server.url("/echo")}};
  CHECK(backend.execute(ext, Json{{"a", 1}}, {}).output == Json{{"echo", {{"a", 1}}}});

  auto slow = testing::agent("slow", {}, {}, CommandLogic{{"sleep", "5"}, 30});
  CHECK(code_of([&] { backend.execute(slow, Json::object(), {std::chrono::milliseconds(200)}); }) ==
        Errc::ExecutorTimeout);
}
