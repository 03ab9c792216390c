#include <doctest.h>

#include <set>

#include "fixtures.hpp"
#include "quadstab/runner.hpp"
#include "quadstab/sim.hpp"
#include "quadstab/verify.hpp"

using namespace quadstab;
using namespace fixtures;

namespace {

std::set<std::uint64_t> pending_ids(const SystemState& s) {
  std::set<std::uint64_t> ids;
  for (const auto& box : s.mailboxes) {
    for (const auto& pm : box) ids.insert(pm.id);
  }
  return ids;
}

// Oldest message age seen at any round end.
struct AgeProbe : SimObserver {
  int max_age = 0;
  void on_round_end(const SystemState& s) override {
    for (const auto& box : s.mailboxes) {
      for (const auto& pm : box) max_age = std::max(max_age, s.round_counter - pm.enqueue_round);
    }
  }
};

ScenarioConfig scenario(int n, InitTopology t, std::uint64_t seed, int inflight = 0) {
  ScenarioConfig sc;
  sc.n = n;
  sc.seed = seed;
  sc.init_topology = t;
  sc.init_inflight = inflight;
  return sc;
}

}  // namespace

TEST_CASE("scenario generation") {
  SUBCASE("single node") {
    const auto s = generate_scenario(scenario(1, InitTopology::list_random, 3, 2));
    REQUIRE(s.size() == 1);
    CHECK_FALSE(s.nodes[0].left);
    CHECK_FALSE(s.nodes[0].right);
    CHECK(s.nodes[0].q.empty());
    CHECK(is_legitimate(s));
  }
  SUBCASE("quad edges only") {
    const auto s = generate_scenario(scenario(8, InitTopology::quad_only, 5));
    std::size_t quad = 0;
    for (const auto& n : s.nodes) {
      CHECK_FALSE(n.left);
      CHECK_FALSE(n.right);
      quad += n.q.size();
    }
    CHECK(quad >= 7);
    CHECK(s.pending() == 0);
    CHECK(weakly_connected(s));
  }
  SUBCASE("min-dist placement is 1/n separated") {
    ScenarioConfig sc;
    sc.n = 16;
    sc.placement = Placement::min_dist;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      sc.seed = seed;
      const auto coords = generate_scenario(sc).coords();
      REQUIRE(coords.size() == 16);
      // Brute force in floating point with a margin well above rounding.
      for (std::size_t i = 0; i < coords.size(); ++i) {
        for (std::size_t j = i + 1; j < coords.size(); ++j) {
          const double dx = coords[i].unit(0) - coords[j].unit(0), dy = coords[i].unit(1) - coords[j].unit(1);
          CHECK(dx * dx + dy * dy >= 1.0 / 256 - 1e-12);
        }
      }
      CHECK(min_distance_holds(coords, 16));
    }
  }
  SUBCASE("every topology is connected and references only nodes") {
    for (auto t : {InitTopology::list_random, InitTopology::quad_only, InitTopology::line, InitTopology::star,
                   InitTopology::random_mixed}) {
      for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto s = generate_scenario(scenario(12, t, seed, 12));
        CHECK(weakly_connected(s));
        CHECK(s.pending() >= 12);
        for (const auto& n : s.nodes) {
          for (const auto& c : explicit_references(n)) CHECK(s.index_of(c) >= 0);
        }
        for (const auto& box : s.mailboxes) {
          for (const auto& pm : box) {
            CHECK(pm.initial_root == pm.id);
            for (const auto& c : payload_references(pm.message)) CHECK(s.index_of(c) >= 0);
          }
        }
      }
    }
  }
  SUBCASE("explicit nodes are validated") {
    ScenarioConfig sc;
    sc.nodes = {a, a};
    CHECK_THROWS_AS(generate_scenario(sc), SimError);
    sc.nodes = {Coord(kBits, {2, 3})};
    CHECK_THROWS_AS(generate_scenario(sc), SimError);
    sc.nodes = {a, b, c};
    CHECK(generate_scenario(sc).size() == 3);
  }
}

TEST_CASE("a quiet system only times out") {
  ScenarioConfig sc = scenario(5, InitTopology::list_random, 1);
  SystemState s(Geometry(2, kBits), generate_scenario(sc).coords());
  ScheduleConfig sch;
  sch.searches_per_round = 0;
  Simulator sim(s, sch);
  sim.run_round();
  REQUIRE(sim.round_counts().size() == 1);
  CHECK(sim.round_counts()[0].timeouts == 5);
  CHECK(sim.round_counts()[0].delivered == std::array<std::uint64_t, 4>{});
}

TEST_CASE("a delivery applies the handler") {
  SystemState s(Geometry(2, kBits), {a, b, c});
  s.enqueue(b, Linearize{a});
  ScheduleConfig sch;
  sch.searches_per_round = 0;
  Simulator sim(s, sch);
  bool seen = false;
  while (!seen) {
    const auto before = sim.state().nodes;
    const auto ev = sim.step();
    if (ev.kind == EventKind::deliver && ev.message == "LINEARIZE(0)") {
      seen = true;
      const auto expect = handle_linearize(sim.state().geometry, before[1], a);
      CHECK(sim.state().nodes[1] == expect.state);
    }
  }
}

TEST_CASE("messages are delivered exactly once") {
  const auto s = generate_scenario(scenario(10, InitTopology::random_mixed, 9, 10));
  Simulator sim(s, {});
  auto prev = pending_ids(sim.state());
  std::uint64_t issued = sim.state().next_message_id;
  std::size_t delivered = 0;
  for (int k = 0; k < 3000; ++k) {
    const auto ev = sim.step();
    const auto now = pending_ids(sim.state());
    // A message may be issued and delivered within one step.
    std::size_t gone = 0;
    for (auto id : prev) gone += now.count(id) == 0;
    for (auto id = issued; id < sim.state().next_message_id; ++id) gone += now.count(id) == 0;
    for (auto id : now) {
      if (prev.count(id) == 0) CHECK(id >= issued);
    }
    if (ev.kind == EventKind::deliver) {
      CHECK(gone == 1);
      ++delivered;
    } else {
      CHECK(gone == 0);
    }
    issued = sim.state().next_message_id;
    prev = now;
  }
  CHECK(delivered + prev.size() < issued);
  CHECK(delivered > 0);
}

TEST_CASE("bounded staleness") {
  for (auto policy : {DeliveryPolicy::oldest_last, DeliveryPolicy::lifo, DeliveryPolicy::random}) {
    CAPTURE(to_string(policy));
    const auto s = generate_scenario(scenario(12, InitTopology::random_mixed, 4, 12));
    ScheduleConfig sch;
    sch.policy = policy;
    sch.delta = 3;
    AgeProbe probe;
    Simulator sim(s, sch);
    sim.attach(&probe);
    for (int r = 0; r < 60; ++r) CHECK_NOTHROW(sim.run_round());
    CHECK(probe.max_age <= 2);
    if (policy == DeliveryPolicy::oldest_last) CHECK(probe.max_age == 2);
  }
}

TEST_CASE("initial messages are gone within delta rounds") {
  const auto s = generate_scenario(scenario(8, InitTopology::list_random, 2, 20));
  ScheduleConfig sch;
  sch.delta = 3;
  Simulator sim(s, sch);
  CHECK(sim.initial_pending() >= 20);
  for (int r = 0; r < 3; ++r) sim.run_round();
  CHECK(sim.initial_pending() == 0);
  CHECK(sim.last_initial_delivery_round() <= 3);
}

TEST_CASE("replay is bit identical") {
  const auto s = generate_scenario(scenario(10, InitTopology::star, 6, 10));
  ScheduleConfig sch;
  sch.seed = 77;
  Simulator one(s, sch), two(s, sch);
  one.keep_trace(true);
  two.keep_trace(true);
  for (int r = 0; r < 30; ++r) {
    one.run_round();
    two.run_round();
  }
  CHECK(one.trace_hash() == two.trace_hash());
  CHECK(one.trace() == two.trace());
  CHECK(one.state() == two.state());

  sch.seed = 78;
  Simulator three(s, sch);
  for (int r = 0; r < 30; ++r) three.run_round();
  CHECK(three.trace_hash() != one.trace_hash());
}

TEST_CASE("run_until") {
  const auto s = generate_scenario(scenario(8, InitTopology::line, 1));
  ScheduleConfig sch;
  sch.max_rounds = 10;
  Simulator sim(s, sch);
  const auto out = sim.run_until([](const SystemState&) { return false; });
  CHECK_FALSE(out.converged);
  CHECK(out.round == 10);

  Simulator legit(s, {});
  const auto done = legit.run_until([](const SystemState& st) { return is_legitimate(st); });
  CHECK(done.converged);
  CHECK(done.round > 0);
}

TEST_CASE("two adjacent nodes settle within delta + 1 rounds") {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    for (auto policy : {DeliveryPolicy::random, DeliveryPolicy::lifo, DeliveryPolicy::oldest_last}) {
      ScheduleConfig sch;
      sch.seed = seed;
      sch.policy = policy;
      const auto r = run_experiment(scenario(2, InitTopology::line, seed), sch, {});
      REQUIRE(r.converged());
      CHECK(*r.converged_round <= sch.delta + 1);
      CHECK(r.total_violations() == 0);
    }
  }
}

TEST_CASE("implicit edges keep the graph connected") {
  SystemState s(Geometry(2, kBits), {a, b, c});
  // c is known only through a message in flight to b.
  s.nodes[0].right = b;
  s.nodes[1].left = a;
  s.enqueue(b, Linearize{c});
  CHECK(weakly_connected(s));
  CHECK_FALSE(monitor_connectivity(s));
  s.mailboxes[static_cast<std::size_t>(s.index_of(b))].clear();
  CHECK_FALSE(weakly_connected(s));
  const auto v = monitor_connectivity(s);
  REQUIRE(v);
  CHECK(v->kind == ViolationKind::connectivity);
}

TEST_CASE("search pool mixes node and free targets") {
  const auto s = generate_scenario(scenario(6, InitTopology::line, 1));
  const auto pool = make_search_pool(s, 1);
  REQUIRE(pool.size() == 16);
  for (std::size_t k = 0; k < pool.size(); ++k) {
    CHECK(s.index_of(pool[k].initiator) >= 0);
    if (k % 2 == 0) CHECK(s.index_of(pool[k].target) >= 0);
  }
}
