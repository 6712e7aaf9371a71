#include <doctest.h>

#include <httplib.h>

#include <fstream>
#include <sstream>
#include <thread>

#include "agentnet/error.hpp"
#include "agentnet/gateway.hpp"
#include "cli.hpp"
#include "fixtures.hpp"

using namespace agentnet;
using namespace std::chrono_literals;

namespace {

GatewayConfig test_config(const testing::TempDir& dir) {
  GatewayConfig c;
  c.listen_addr = "127.0.0.1:0";
  c.registry_journal_path = dir.file("registry.jsonl");
  c.flow_log_path = dir.file("flows.jsonl");
  c.scheduler.workers = 2;
  return c;
}

Json body_of(const httplib::Result& r) { return Json::parse(r->body); }

Json descriptor(const std::string& id, std::vector<std::string> in, std::vector<std::string> out) {
  return Json{{"service_id", id}, {"vertex", vertex_to_json(testing::producer(id, in, out))}};
}

struct Cli {
  std::string server;
  std::string out, err;
  int operator()(std::vector<std::string> args) {
    args.insert(args.begin(), {"agentnet", "--server", server});
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream o, e;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), o, e);
    out = o.str();
    err = e.str();
    return code;
  }
};

Json poll_task(httplib::Client& c, const std::string& id) {
  for (int i = 0; i < 500; ++i) {
    Json t = body_of(c.Get("/v1/tasks/" + id));
    if (t["status"] == "Success" || t["status"] == "Fail") return t;
    std::this_thread::sleep_for(10ms);
  }
  return Json::object();
}

}  // namespace

TEST_CASE("config parsing") {
  auto c = config_from_json(Json{{"listen_addr", "0.0.0.0:9000"}, {"max_steps", 5}, {"t_suspect_ms", 10}, {"t_dead_ms", 20}});
  CHECK(c.listen_addr == "0.0.0.0:9000");
  CHECK(c.scheduler.max_steps == 5);
  CHECK(c.liveness.dead_after_ms == 20);
  CHECK_THROWS_WITH_AS(config_from_json(Json{{"colour", "blue"}}), doctest::Contains("ConfigError"), Error);
  CHECK_THROWS_AS(config_from_json(Json{{"max_steps", "five"}}), Error);

  CHECK(parse_listen_addr("127.0.0.1:80") == std::make_pair(std::string("127.0.0.1"), 80));
  CHECK(parse_listen_addr("[::1]:0").first == "::1");
  for (const char* bad : {"nohost", ":80", "host:", "host:99999", "host:8x"}) {
    CAPTURE(bad);
    CHECK_THROWS_AS(parse_listen_addr(bad), Error);
  }

  ::setenv("MAX_STEPS", "7", 1);
  ::setenv("T_SUSPECT", "500", 1);
  GatewayConfig e;
  apply_env_overrides(e);
  CHECK(e.scheduler.max_steps == 7);
  CHECK(e.liveness.suspect_after_ms == 500);
  ::setenv("MAX_STEPS", "lots", 1);
  CHECK_THROWS_AS(apply_env_overrides(e), Error);
  ::unsetenv("MAX_STEPS");
  ::unsetenv("T_SUSPECT");

  GatewayConfig bad;
  bad.scheduler.max_steps = 0;
  CHECK_THROWS_AS(validate_config(bad), Error);
}

TEST_CASE("bind failures") {
  testing::TempDir dir;
  auto cfg = test_config(dir);
  cfg.listen_addr = "256.1.1.1:0";
  Gateway gw(cfg);
  CHECK_THROWS_WITH_AS(gw.start(), doctest::Contains("BindError"), Error);

  cfg.listen_addr = "not-an-address";
  CHECK_THROWS_WITH_AS(Gateway{cfg}, doctest::Contains("ConfigError"), Error);
}

TEST_CASE("services and tasks over HTTP") {
  testing::TempDir dir;
  Gateway gw(test_config(dir));
  const int port = gw.start();
  httplib::Client c("127.0.0.1", port);

  auto health = c.Get("/v1/health");
  REQUIRE(health);
  CHECK(health->status == 200);
  CHECK(body_of(health)["status"] == "ok");

  auto reg = c.Post("/v1/services", descriptor("coder", {"task"}, {"code"}).dump(), "application/json");
  CHECK(reg->status == 201);
  CHECK(body_of(reg)["service_id"] == "coder");
  auto dup = c.Post("/v1/services", descriptor("coder", {"task"}, {"code"}).dump(), "application/json");
  CHECK(dup->status == 409);
  CHECK(body_of(dup)["error"] == "DuplicateService");
  auto junk = c.Post("/v1/services", "{", "application/json");
  CHECK(junk->status == 400);

  c.Post("/v1/services", descriptor("reviewer", {"code"}, {"review"}).dump(), "application/json");
  Json grp{{"vertex", vertex_to_json(testing::group("dev", {"coder", "reviewer"}, {"task"}, {"review"}))}};
  CHECK(c.Post("/v1/services", grp.dump(), "application/json")->status == 201);

  auto found = body_of(c.Get("/v1/services?outputs=review&top_k=5"));
  REQUIRE(found["results"].size() == 2);
  CHECK(found["results"][0]["liveness"] == "alive");
  CHECK(found["results"][0]["descriptor"]["vertex"]["id"].is_string());
  CHECK(c.Get("/v1/services")->status == 400);
  CHECK(c.Get("/v1/services/coder")->status == 200);
  CHECK(c.Get("/v1/services/ghost")->status == 404);
  CHECK(body_of(c.Post("/v1/services/coder/heartbeat", "", "application/json"))["liveness"] == "alive");

  auto sub = c.Post("/v1/tasks", Json{{"target", "dev"}, {"payload", {{"task", "write it"}}}}.dump(), "application/json");
  REQUIRE(sub->status == 202);
  const std::string id = body_of(sub)["task_id"];
  Json t = poll_task(c, id);
  CHECK(t["status"] == "Success");
  CHECK(t["chain_length"] == 3);

  auto dot = c.Get("/v1/tasks/" + id + "/graph?format=dot");
  CHECK(dot->status == 200);
  CHECK(dot->body.rfind("digraph", 0) == 0);
  CHECK(body_of(c.Get("/v1/tasks/" + id + "/graph"))["nodes"].size() == 3);
  CHECK(c.Get("/v1/tasks/" + id + "/graph?format=svg")->status == 400);
  CHECK(c.Get("/v1/tasks/nope")->status == 404);
  CHECK(c.Post("/v1/tasks", Json{{"target", "ghost"}}.dump(), "application/json")->status == 404);
  CHECK(c.Post("/v1/tasks", Json{{"target", "dev"}, {"payload", Json::object()}}.dump(), "application/json")->status ==
        400);

  auto route = c.Post("/v1/routes", Json{{"from", "coder"}, {"to", "reviewer"}, {"kind", "SOFT"}}.dump(),
                      "application/json");
  CHECK(route->status == 201);
  CHECK(body_of(c.Get("/v1/routes"))["routes"].size() == 1);
  auto badroute = c.Post("/v1/routes", Json{{"from", "coder"}, {"to", "coder"}, {"kind", "HARD"}}.dump(),
                         "application/json");
  CHECK(badroute->status == 400);

  CHECK(c.Delete("/v1/services/reviewer")->status == 204);
  CHECK(c.Delete("/v1/services/reviewer")->status == 404);
  CHECK(c.Get("/v1/nowhere")->status == 404);

  gw.stop();
  auto scan = read_flow_log(dir.file("flows.jsonl"));
  CHECK(scan.records.size() == 1);
  CHECK(scan.skipped == 0);
}

TEST_CASE("journaled services come back after a restart") {
  testing::TempDir dir;
  {
    Gateway gw(test_config(dir));
    ServiceDescriptor d;
    d.service_id = "coder";
    d.vertex = testing::agent("coder", {"task"}, {"code"});
    gw.registry().register_service(d);
  }
  Gateway again(test_config(dir));
  CHECK(again.registry().get("coder").has_value());
  CHECK(again.network().snapshot()->contains("coder"));
}

TEST_CASE("command line client") {
  testing::TempDir dir;
  Gateway gw(test_config(dir));
  const int port = gw.start();
  Cli run{"http://127.0.0.1:" + std::to_string(port)};

  const auto file = dir.file("services.json");
  std::ofstream(file) << Json::array({descriptor("coder", {"task"}, {"code"}), descriptor("reviewer", {"code"}, {"review"})})
                             .dump();
  CHECK(run({"register", "-f", file}) == 0);
  CHECK(run.out == "coder\nreviewer\n");
  CHECK(run({"register", "-f", file}) == 1);
  CHECK(run.err.find("DuplicateService") != std::string::npos);

  CHECK(run({"validate", "-f", file}) == 0);
  CHECK(run.out.find("coder: ok") != std::string::npos);
  const auto bad = dir.file("bad.json");
  std::ofstream(bad) << Json{{"id", "x"}, {"kind", "agent"}, {"name", ""}}.dump();
  CHECK(run({"validate", "-f", bad}) == 1);

  CHECK(run({"submit", "--vertex", "coder", "--input", "not json"}) == 2);
  CHECK(run({"submit", "--input", "{}"}) == 2);
  CHECK(run({"submit", "--vertex", "coder", "--input", R"({"task":"x"})"}) == 0);
  std::string id = run.out.substr(0, run.out.find('\n'));
  CHECK(gw.scheduler().wait(id, 10s).status == TaskStatus::Success);
  CHECK(run({"status", id}) == 0);
  CHECK(run.out.find("\"Success\"") != std::string::npos);
  CHECK(run({"graph", id, "--format", "dot"}) == 0);
  CHECK(run.out.rfind("digraph", 0) == 0);
  CHECK(run({"status", "nope"}) == 1);
  CHECK(run.err.find("UnknownTask") != std::string::npos);

  CHECK(run({"stats", "--log", dir.file("flows.jsonl")}) == 0);
  CHECK(run.out.find("Overview of Tasks") != std::string::npos);
  CHECK(run({"stats", "--log", dir.file("flows.jsonl"), "--format", "json", "--vertexes"}) == 0);
  CHECK(Json::parse(run.out).contains("vertex_stats"));
  CHECK(run({"stats", "--log", dir.file("missing.jsonl")}) == 1);
  CHECK(run.err.find("IoError") != std::string::npos);
  CHECK(run({"contribution", "--log", dir.file("flows.jsonl")}) == 0);
  CHECK(Json::parse(run.out).contains("coder"));
  CHECK(run({"mine", "--log", dir.file("flows.jsonl"), "--min-support", "0"}) == 2);
  CHECK(run({"mine", "--log", dir.file("flows.jsonl"), "--min-support", "0.5"}) == 0);

  CHECK(run({"deregister", "reviewer"}) == 0);
  CHECK(run({"deregister", "reviewer"}) == 1);
  CHECK(run({"frobnicate"}) == 2);
  CHECK(run({}) == 2);

  Cli offline{"http://127.0.0.1:1"};
  CHECK(offline({"status", id}) == 1);
}
