#include <doctest.h>

#include <sstream>

#include "fixtures.hpp"
#include "quadstab/wire.hpp"

using namespace quadstab;
using namespace fixtures;

namespace {

const Geometry g2(2, kBits);

std::size_t count_of(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = text.find(needle); p != std::string::npos; p = text.find(needle, p + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("coordinates and regions round trip") {
  Rng rng(5);
  for (int dim : {2, 3, 5}) {
    for (int k = 0; k < 50; ++k) {
      const auto p = random_coord(rng, dim);
      const auto j = coord_to_json(p);
      CHECK(j.at("bits") == kBits);
      CHECK(j.at("axes").size() == static_cast<std::size_t>(dim));
      CHECK(coord_from_json(Json::parse(j.dump())) == p);
    }
  }
  for (const char* path : {"", "L", "LR", "RRLLRL"}) {
    const auto r = g2.region(path);
    CHECK(region_from_json(g2, region_to_json(r)) == r);
  }
  CHECK(region_to_json(std::nullopt).is_null());
  CHECK_FALSE(region_from_json(g2, Json(nullptr)));
  CHECK_THROWS(region_from_json(g2, Json("LXR")));
  CHECK_THROWS_AS(coord_from_json(Json{{"bits", 30}}), WireError);
}

TEST_CASE("messages round trip") {
  Search search{a, at(0.3, 0.3), 9, 2, {a, b, c}};
  const std::vector<Message> all{Linearize{b}, QLinearize{c, g2.region("LR")}, QLinearize{c, std::nullopt},
                                 search, SearchResult{9, dp}};
  for (const auto& m : all) {
    const auto j = message_to_json(m);
    CHECK(j.at("type") == kind_name(kind_of(m)));
    CHECK(message_from_json(g2, Json::parse(j.dump())) == m);
  }
  CHECK_THROWS_AS(message_from_json(g2, Json{{"type", "PING"}}), WireError);
}

TEST_CASE("node states round trip") {
  NodeState s(b);
  s.left = a;
  s.q = {a, c, dp};
  s.rr_q = 4;
  s.rr_area = 7;
  CHECK(node_state_from_json(node_state_to_json(s)) == s);
  CHECK(node_state_from_json(node_state_to_json(NodeState(a))) == NodeState(a));
}

TEST_CASE("snapshots round trip mid-run") {
  ScenarioConfig sc;
  sc.n = 12;
  sc.init_topology = InitTopology::random_mixed;
  sc.init_inflight = 12;
  Simulator sim(generate_scenario(sc), {});
  for (int k = 0; k < 40; ++k) sim.step();
  REQUIRE(sim.state().pending() > 0);
  const auto j = snapshot_to_json(sim.state());
  CHECK(j.at("schema") == kSnapshotSchema);
  const auto back = snapshot_from_json(Json::parse(j.dump()));
  CHECK(back == sim.state());
  CHECK(snapshot_to_json(back) == j);

  auto bad = j;
  bad["schema"] = "quadstab.snapshot/0";
  CHECK_THROWS_AS(snapshot_from_json(bad), WireError);
  CHECK_THROWS_AS(snapshot_from_json(Json::object()), WireError);
}

TEST_CASE("DOT export") {
  const auto dot = to_dot(legitimate_state(g2, {a, c}));
  CHECK(dot.rfind("digraph overlay", 0) == 0);
  CHECK(count_of(dot, "kind=list") == 2);
  CHECK(count_of(dot, "kind=quad") == 2);
  CHECK(count_of(dot, "n0 -> n1") == 2);
}

TEST_CASE("scenarios round trip") {
  ScenarioConfig sc;
  sc.n = 5;
  sc.dim = 3;
  sc.seed = 42;
  sc.placement = Placement::min_dist;
  sc.init_topology = InitTopology::star;
  sc.init_inflight = 3;
  auto back = scenario_from_json(scenario_to_json(sc));
  CHECK(back.n == 5);
  CHECK(back.dim == 3);
  CHECK(back.seed == 42);
  CHECK(back.placement == Placement::min_dist);
  CHECK(back.init_topology == InitTopology::star);
  CHECK(back.init_inflight == 3);
  CHECK(back.nodes.empty());

  ScenarioConfig explicit_nodes;
  explicit_nodes.nodes = {a, b, c};
  back = scenario_from_json(scenario_to_json(explicit_nodes));
  CHECK(back.nodes == explicit_nodes.nodes);
  CHECK(back.n == 3);

  const auto reals = Json::parse(R"({"schema":"quadstab.scenario/1","dimension":2,"nodes":[[0.1,0.9],[0.6,0.2]]})");
  CHECK(scenario_from_json(reals).nodes == std::vector<Coord>{a, c});
  CHECK_THROWS_AS(scenario_from_json(Json::parse(R"({"schema":"quadstab.scenario/1","dimension":2,"nodes":[[1.5,0.2]]})")),
                  WireError);
}

TEST_CASE("reports") {
  ScenarioConfig sc;
  sc.n = 4;
  ScheduleConfig sch;
  sch.max_rounds = 200;
  const auto r = run_experiment(sc, sch, {});
  const auto j = report_to_json(r);
  CHECK(j.at("schema") == kReportSchema);
  CHECK(j.at("outcome") == "CONVERGED");
  CHECK(j.at("converged_round") == *r.converged_round);
  CHECK(j.at("violations").size() == kViolationKinds);
  CHECK(j.at("message_counts").at("per_round").size() == static_cast<std::size_t>(r.rounds_run));
  CHECK(j.at("message_counts").at("total").at("TIMEOUT") == 4u * static_cast<unsigned>(r.rounds_run));
  CHECK(j.at("trace_hash").is_string());
  CHECK(j.contains("initial_messages"));

  const auto v = violation_to_json({ViolationKind::closure, 3, "x"});
  CHECK(v.at("schema") == kViolationSchema);
  CHECK(v.at("kind") == to_string(ViolationKind::closure));
}

TEST_CASE("traces") {
  std::ostringstream empty;
  write_trace(empty, {});
  CHECK(empty.str().empty());

  ScenarioConfig sc;
  sc.n = 3;
  Simulator sim(generate_scenario(sc), {});
  sim.keep_trace(true);
  sim.run_round();
  std::ostringstream os;
  write_trace(os, sim.trace());
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  CHECK(Json::parse(line).at("schema") == kTraceSchema);
  std::size_t events = 0;
  while (std::getline(in, line)) {
    const auto e = Json::parse(line);
    CHECK(e.contains("step"));
    ++events;
  }
  CHECK(events == sim.trace().size());
  CHECK(events >= 3);
}
