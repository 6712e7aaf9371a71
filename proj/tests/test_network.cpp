#include <doctest.h>

#include <thread>

#include "agentnet/error.hpp"
#include "agentnet/network.hpp"
#include "fixtures.hpp"

using namespace agentnet;
using testing::agent;
using testing::group;

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

AgentNetwork team() {
  return AgentNetwork{}
      .add_vertex(agent("a", {"task"}, {"plan"}))
      .add_vertex(agent("b", {"plan"}, {"code"}))
      .add_vertex(agent("c", {"code"}, {"review"}))
      .add_vertex(group("g", {"a", "b"}, {"task"}, {"code"}));
}

}  // namespace

TEST_CASE("add_vertex") {
  const AgentNetwork empty;
  auto one = empty.add_vertex(agent("coder", {"task"}, {"code"}));
  CHECK(one.version() == 1);
  CHECK(one.vertex_count() == 1);
  CHECK(empty.vertex_count() == 0);
  CHECK(empty.version() == 0);

  CHECK(code_of([&] { (void)one.add_vertex(agent("coder", {}, {})); }) == Errc::DuplicateId);
  CHECK(code_of([&] { (void)one.add_vertex(group("g", {"ghost"}, {}, {})); }) == Errc::InvalidVertex);
  CHECK(code_of([&] { (void)one.add_vertex(group("g", {}, {}, {})); }) == Errc::InvalidVertex);
  CHECK(code_of([&] { (void)one.add_vertex(agent("x", {"2bad"}, {})); }) == Errc::InvalidVertex);
  CHECK(code_of([&] { (void)one.add_vertex(agent("x", {}, {}, CommandLogic{{"cat"}, 0})); }) == Errc::InvalidVertex);
  CHECK(one.version() == 1);
}

TEST_CASE("add_route validation") {
  const auto net = team();
  auto soft = net.add_route({"a", "b", RouteKind::Soft});
  CHECK(soft.version() == net.version() + 1);
  CHECK(soft.routes().size() == 1);
  CHECK(net.routes().empty());

  CHECK(code_of([&] { (void)net.add_route({"a", "c", RouteKind::Soft}); }) == Errc::SoftRouteOutsideGroup);
  CHECK(code_of([&] { (void)net.add_route({"g", "a", RouteKind::Ext}); }) == Errc::ExtRouteInsideGroup);
  CHECK(code_of([&] { (void)net.add_route({"a", "a", RouteKind::Hard}); }) == Errc::SelfLoop);
  CHECK(code_of([&] { (void)net.add_route({"a", "zz", RouteKind::Hard}); }) == Errc::UnknownEndpoint);
  CHECK(code_of([&] { (void)net.add_route({"a", "c", RouteKind::Ext}); }) == Errc::InvalidVertex);
  CHECK(net.add_route({"g", "c", RouteKind::Ext}).routes().size() == 1);
  CHECK(net.add_route({"a", "c", RouteKind::Hard, 2, "has(code)"}).routes_from("a", RouteKind::Hard).size() == 1);
}

TEST_CASE("EXT target nested below the group is rejected") {
  auto net = team().add_vertex(group("outer", {"g", "c"}, {"task"}, {"review"}));
  CHECK(code_of([&] { (void)net.add_route({"outer", "a", RouteKind::Ext}); }) == Errc::ExtRouteInsideGroup);
  CHECK(code_of([&] { (void)net.add_route({"outer", "g", RouteKind::Ext}); }) == Errc::ExtRouteInsideGroup);
}

TEST_CASE("remove_vertex") {
  auto net = team().add_route({"a", "b", RouteKind::Soft}).add_route({"b", "c", RouteKind::Hard});
  auto without_b = net.remove_vertex("b");
  CHECK_FALSE(without_b.contains("b"));
  CHECK(without_b.routes().empty());
  CHECK(without_b.find("g")->group()->members == std::vector<VertexId>{"a"});
  CHECK(net.contains("b"));

  CHECK(code_of([&] { (void)without_b.remove_vertex("a"); }) == Errc::WouldEmptyGroup);
  CHECK(code_of([&] { (void)net.remove_vertex("nope"); }) == Errc::UnknownVertex);
}

TEST_CASE("flatten_group") {
  auto base = AgentNetwork{}.add_vertex(agent("a", {}, {})).add_vertex(agent("b", {}, {})).add_vertex(agent("c", {}, {}));
  auto n1 = base.add_vertex(group("g2", {"b", "c"}, {}, {})).add_vertex(group("g1", {"a", "g2"}, {}, {}));
  CHECK(n1.flatten_group("g1") == std::vector<VertexId>{"a", "b", "c"});

  auto n2 = base.add_vertex(group("g", {"a"}, {}, {}));
  CHECK(n2.flatten_group("g") == std::vector<VertexId>{"a"});

  auto n3 = base.add_vertex(group("g2", {"a", "b"}, {}, {})).add_vertex(group("g1", {"g2", "a"}, {}, {}));
  CHECK(n3.flatten_group("g1") == std::vector<VertexId>{"a", "b"});
  CHECK(n3.flatten_group("g2") == std::vector<VertexId>{"a", "b"});

  CHECK(code_of([&] { (void)n3.flatten_group("zz"); }) == Errc::UnknownVertex);
}

TEST_CASE("every SOFT route in a built network shares a parent group") {
  auto net = team().add_route({"a", "b", RouteKind::Soft}).add_route({"b", "a", RouteKind::Soft, 1});
  for (const auto& r : net.routes()) {
    if (r.kind != RouteKind::Soft) continue;
    auto pa = net.parents_of(r.from), pb = net.parents_of(r.to);
    bool common = false;
    for (const auto& p : pa) common = common || std::find(pb.begin(), pb.end(), p) != pb.end();
    CHECK(common);
  }
}

TEST_CASE("descriptor round trip") {
  auto v = agent("coder", {"task"}, {"code:string"}, CommandLogic{{"python3", "-c", "pass"}, 5});
  CHECK(vertex_from_json(vertex_to_json(v)) == v);
  auto g = group("g", {"a", "b"}, {"task"}, {"code"});
  CHECK(vertex_from_json(vertex_to_json(g)) == g);
  Vertex ext{"rpa1", ExternalDescriptor{"rpa1", "desktop bot", testing::schema({"x"}), testing::schema({"y"}),
                                        ProtocolTag::Rpa, "http://127.0.0.1:9/run"}};
  CHECK(vertex_from_json(vertex_to_json(ext)) == ext);
  Route r{"a", "b", RouteKind::Hard, 3, "has(x)"};
  CHECK(route_from_json(route_to_json(r)) == r);

  CHECK_THROWS_AS(vertex_from_json(Json{{"id", "x"}, {"kind", "robot"}}), Error);
  auto llm = vertex_from_json(Json::parse(R"({"id":"w","kind":"agent","name":"w","description":"writes",
      "system_prompt":"Write.","input_schema":{"params":[]},"output_schema":{"params":[{"name":"text","kind":"string","description":"","required":true}]},
      "logic":{"llm":{"model_hint":"small"}}})"));
  CHECK(std::get<LlmLogic>(llm.agent()->logic).model_hint == "small");
}

TEST_CASE("NetworkOwner serializes concurrent mutations") {
  NetworkOwner owner;
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 25; ++i) owner.add_vertex(agent("v" + std::to_string(t) + "_" + std::to_string(i), {}, {}));
    });
  }
  for (auto& th : threads) th.join();
  auto snap = owner.snapshot();
  CHECK(snap->vertex_count() == 100);
  CHECK(snap->version() == 100);
}
