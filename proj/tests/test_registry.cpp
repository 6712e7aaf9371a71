#include <doctest.h>

#include <atomic>
#include <fstream>

#include "agentnet/error.hpp"
#include "agentnet/jsonl.hpp"
#include "agentnet/registry.hpp"
#include "fixtures.hpp"

using namespace agentnet;
using testing::agent;

namespace {

struct FakeClock {
  std::shared_ptr<std::atomic<TimestampMs>> t = std::make_shared<std::atomic<TimestampMs>>(1'000'000);
  Registry::Clock fn() const {
    auto p = t;
    return [p] { return p->load(); };
  }
  void advance(TimestampMs ms) { *t += ms; }
};

ServiceDescriptor svc(const std::string& id, std::initializer_list<std::string> in, std::initializer_list<std::string> out,
                      const std::string& description = {}) {
  ServiceDescriptor d;
  d.service_id = id;
  d.vertex = agent(id, in, out, BuiltinLogic{"identity"}, description);
  return d;
}

Registry::Options with_clock(const FakeClock& c) {
  Registry::Options o;
  o.clock = c.fn();
  return o;
}

}  // namespace

TEST_CASE("register, get, duplicate") {
  FakeClock clock;
  Registry reg(with_clock(clock));
  CHECK(reg.register_service(svc("coder", {"task"}, {"code"})) == "coder");
  auto got = reg.get("coder");
  REQUIRE(got);
  CHECK(got->registered_at == 1'000'000);
  CHECK(got->last_heartbeat == got->registered_at);
  CHECK(reg.liveness("coder") == Liveness::Alive);

  CHECK_THROWS_WITH_AS(reg.register_service(svc("coder", {}, {})), doctest::Contains("DuplicateService"), Error);

  auto bad = svc("dup", {}, {});
  bad.vertex.body = AgentRole{"dup", "", "", testing::schema({"x", "x"}), {}, BuiltinLogic{"identity"}};
  CHECK_THROWS_WITH_AS(reg.register_service(bad), doctest::Contains("InvalidDescriptor"), Error);
}

TEST_CASE("deregister") {
  Registry reg;
  reg.register_service(svc("reviewer", {"code"}, {"review"}));
  DiscoveryQuery q;
  q.name_substring = "review";
  CHECK(reg.discover(q).size() == 1);
  reg.deregister("reviewer");
  CHECK(reg.discover(q).empty());
  CHECK_THROWS_WITH_AS(reg.deregister("reviewer"), doctest::Contains("UnknownService"), Error);
  CHECK(reg.register_service(svc("reviewer", {"code"}, {"review"})) == "reviewer");
}

TEST_CASE("heartbeat and liveness thresholds") {
  FakeClock clock;
  Registry reg(with_clock(clock));
  reg.register_service(svc("s", {}, {"y"}));
  CHECK(reg.heartbeat("s") == Liveness::Alive);
  clock.advance(31'000);
  CHECK(reg.liveness("s") == Liveness::Suspect);
  clock.advance(90'000);
  CHECK(reg.liveness("s") == Liveness::Dead);

  DiscoveryQuery q;
  q.name_substring = "s";
  CHECK(reg.discover(q).empty());
  q.include_dead = true;
  CHECK(reg.discover(q).size() == 1);

  // A dead entry can be replaced.
  CHECK(reg.register_service(svc("s", {}, {"y"})) == "s");
  CHECK(reg.liveness("s") == Liveness::Alive);
  CHECK_THROWS_AS(reg.heartbeat("missing"), Error);

  CHECK(compute_liveness(100, 100, {30, 120}) == Liveness::Alive);
  CHECK(compute_liveness(130, 100, {30, 120}) == Liveness::Suspect);
  CHECK(compute_liveness(220, 100, {30, 120}) == Liveness::Dead);
}

TEST_CASE("discover scoring") {
  Registry reg;
  reg.register_service(svc("reviewer", {"code"}, {"review"}, "reviews code for defects"));
  reg.register_service(svc("coder", {"task"}, {"code"}, "writes code"));
  reg.register_service(svc("tester", {"code"}, {"report"}, "runs tests"));

  DiscoveryQuery q;
  q.required_output = testing::schema({"review"});
  auto hits = reg.discover(q);
  REQUIRE(hits.size() == 1);
  CHECK(hits[0].service_id == "reviewer");
  CHECK(hits[0].score >= 0.3);

  DiscoveryQuery none;
  none.description_keywords = std::vector<std::string>{"astronomy"};
  CHECK(reg.discover(none).empty());

  DiscoveryQuery kw;
  kw.description_keywords = std::vector<std::string>{"code", "defects"};
  kw.acceptable_input = Json{{"code", "x"}};
  hits = reg.discover(kw);
  REQUIRE(hits.size() == 3);
  CHECK(hits[0].service_id == "reviewer");  // 0.4 * 2/2 + 0.3
  CHECK(hits[0].score == doctest::Approx(0.7));
  for (std::size_t i = 1; i < hits.size(); ++i) CHECK(hits[i - 1].score >= hits[i].score);

  CHECK_THROWS_WITH_AS(reg.discover(DiscoveryQuery{}), doctest::Contains("EmptyQuery"), Error);
  DiscoveryQuery zero = q;
  zero.top_k = 0;
  CHECK_THROWS_AS(reg.discover(zero), Error);
}

TEST_CASE("equal scores break ties by id") {
  Registry reg;
  reg.register_service(svc("b", {}, {"out"}));
  reg.register_service(svc("a", {}, {"out"}));
  DiscoveryQuery q;
  q.required_output = testing::schema({"out"});
  auto hits = reg.discover(q);
  REQUIRE(hits.size() == 2);
  CHECK(hits[0].service_id == "a");
  q.top_k = 1;
  CHECK(reg.discover(q).size() == 1);
}

TEST_CASE("journal replay reproduces discovery") {
  testing::TempDir dir;
  const auto path = dir.file("registry.jsonl");
  DiscoveryQuery q;
  q.description_keywords = std::vector<std::string>{"code"};
  q.required_output = testing::schema({"review"});
  std::vector<DiscoveryHit> before;
  {
    Registry::Options o;
    o.journal_path = path;
    Registry reg(o);
    reg.register_service(svc("reviewer", {"code"}, {"review"}, "reviews code"));
    reg.register_service(svc("coder", {"task"}, {"code"}, "writes code"));
    reg.register_service(svc("gone", {}, {"review"}));
    reg.deregister("gone");
    reg.heartbeat("coder");
    before = reg.discover(q);
  }
  append_line(path, "{not json");
  Registry::Options o;
  o.journal_path = path;
  Registry again(o);
  CHECK(again.size() == 2);
  CHECK(again.replay_skipped() == 1);
  CHECK(again.discover(q) == before);

  for (const auto& line : read_lines(path)) {
    Json j = Json::parse(line, nullptr, false);
    if (j.is_discarded()) continue;
    CHECK(j.contains("ts"));
    CHECK(j.contains("event"));
    CHECK(j.contains("service_id"));
  }
}

TEST_CASE("descriptor json accepts envelope and bare vertex") {
  auto bare = descriptor_from_json(vertex_to_json(agent("x", {}, {"y"})));
  CHECK(bare.service_id == "x");
  Json env{{"service_id", "svc-x"}, {"vertex", vertex_to_json(agent("x", {}, {"y"}))}, {"tags", {"t1"}}};
  auto d = descriptor_from_json(env);
  CHECK(d.service_id == "svc-x");
  CHECK(d.tags == std::vector<std::string>{"t1"});
  CHECK(descriptor_from_json(descriptor_to_json(d)).vertex == d.vertex);
}
