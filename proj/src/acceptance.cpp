#include "quadstab/acceptance.hpp"

#include <chrono>
#include <ostream>
#include <set>

#include "quadstab/runner.hpp"
#include "quadstab/wire.hpp"

namespace quadstab {

Mutation parse_mutation(std::string_view s) {
  if (s == "none") return Mutation::none;
  if (s == "closure") return Mutation::closure;
  if (s == "flip-y" || s == "flip_y") return Mutation::flip_y;
  throw SimError("unknown mutation '" + std::string(s) + "'");
}

std::string format_result(const CriterionResult& r) {
  std::string id = std::to_string(r.id);
  if (id.size() < 2) id = " " + id;
  return std::string(r.pass ? "PASS" : "FAIL") + " " + id + " " + r.name + ": " + r.detail;
}

namespace {

constexpr InitTopology kTopologies[] = {InitTopology::list_random, InitTopology::quad_only,
                                        InitTopology::line, InitTopology::star,
                                        InitTopology::random_mixed};

std::string label(const ScenarioConfig& sc, const ScheduleConfig& sch) {
  return "n=" + std::to_string(sc.n) + " d=" + std::to_string(sc.dim) + " seed=" +
         std::to_string(sc.seed) + " init=" + to_string(sc.init_topology) + " placement=" +
         to_string(sc.placement) + " policy=" + to_string(sch.policy);
}

struct Job {
  ScenarioConfig scenario;
  ScheduleConfig schedule;
};

struct Replay {
  Job job;
  std::uint64_t hash = 0;
  std::string report;
};

std::string stable_report(const RunReport& r) {
  Json j = report_to_json(r);
  j.erase("wall_seconds");
  return j.dump();
}

/// Aggregate over one group of runs.
struct Tally {
  std::size_t runs = 0;
  std::size_t converged = 0;
  int max_round = 0;
  int max_round_limit = 0;
  std::string first_nonconverged;

  std::array<std::size_t, kViolationKinds> violations{};
  std::array<std::string, kViolationKinds> first_violation;

  std::size_t searches = 0;
  int max_hops = 0;
  std::map<int, int> max_hops_by_n;
  std::size_t initial_messages = 0;
  int max_initial_delivery = 0;
  int max_chain = 0;
  std::size_t initial_bad = 0;
  std::string first_initial_bad;
  std::size_t extra_rounds_short = 0;

  double seconds = 0.0;
  std::vector<Replay> replays;

  void add(const Job& job, const RunReport& r, int extra_rounds) {
    ++runs;
    seconds += r.wall_seconds;
    if (r.converged()) {
      ++converged;
      max_round = std::max(max_round, *r.converged_round);
      if (r.rounds_run < *r.converged_round + extra_rounds) ++extra_rounds_short;
    } else if (first_nonconverged.empty()) {
      first_nonconverged = label(job.scenario, job.schedule);
    }
    max_round_limit = std::max(max_round_limit, r.max_rounds);
    for (std::size_t k = 0; k < kViolationKinds; ++k) {
      violations[k] += r.violations[k];
      if (r.violations[k] && first_violation[k].empty()) {
        first_violation[k] = label(job.scenario, job.schedule);
        for (const auto& v : r.violation_samples) {
          if (static_cast<std::size_t>(v.kind) == k) {
            first_violation[k] += " round " + std::to_string(v.round) + ": " + v.details;
            break;
          }
        }
      }
    }
    searches += r.searches_completed;
    max_hops = std::max(max_hops, r.max_hops);
    auto& mh = max_hops_by_n[job.scenario.n];
    mh = std::max(mh, r.max_hops);
    initial_messages += r.initial_messages;
    max_initial_delivery = std::max(max_initial_delivery, r.last_initial_delivery_round);
    max_chain = std::max(max_chain, r.max_initial_chain);
    if (!r.initial_messages_consumed()) {
      ++initial_bad;
      if (first_initial_bad.empty()) first_initial_bad = label(job.scenario, job.schedule);
    }
  }

  std::size_t count(ViolationKind k) const { return violations[static_cast<std::size_t>(k)]; }
  std::size_t total() const {
    std::size_t t = 0;
    for (auto v : violations) t += v;
    return t;
  }
  std::string violation_note(ViolationKind k) const {
    const auto& f = first_violation[static_cast<std::size_t>(k)];
    return f.empty() ? "" : "; first: " + f;
  }
};

RunOptions options_for(Mutation m) {
  RunOptions o;
  if (m == Mutation::closure) {
    o.on_converged = [](SystemState& s) {
      for (auto& n : s.nodes) {
        if (!n.q.empty()) {
          n.q.pop_back();
          return;
        }
      }
    };
  }
  return o;
}

Tally run_group(const std::vector<Job>& jobs, const RunOptions& opts, std::size_t replay_every,
                std::ostream* progress, const std::string& name) {
  Tally t;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto r = run_experiment(jobs[i].scenario, jobs[i].schedule, opts);
    t.add(jobs[i], r, opts.extra_rounds);
    if (i % replay_every == 0 || i + 1 == jobs.size()) {
      t.replays.push_back({jobs[i], r.trace_hash, stable_report(r)});
    }
  }
  if (progress) {
    *progress << "  [" << name << "] " << t.runs << " runs in " << t.seconds << " s\n";
  }
  return t;
}

std::vector<Job> sweep_jobs(int dim, std::initializer_list<int> ns, int seeds, Placement placement,
                            bool all_topologies) {
  std::vector<Job> jobs;
  for (int n : ns) {
    for (int seed = 1; seed <= seeds; ++seed) {
      for (std::size_t t = 0; t < std::size(kTopologies); ++t) {
        if (!all_topologies && t != static_cast<std::size_t>(seed) % std::size(kTopologies)) continue;
        Job j;
        j.scenario.n = n;
        j.scenario.dim = dim;
        j.scenario.seed = static_cast<std::uint64_t>(seed);
        j.scenario.placement = placement;
        j.scenario.init_topology = kTopologies[t];
        j.scenario.init_inflight = n;
        j.schedule.seed = static_cast<std::uint64_t>(seed) * 7919u + t;
        j.schedule.policy = static_cast<DeliveryPolicy>((static_cast<std::size_t>(seed) + t) % 3);
        jobs.push_back(j);
      }
    }
  }
  return jobs;
}

CriterionResult ordering_criterion(const AcceptanceOptions& opts) {
  CriterionResult c{8, "ordering-oracle", true, ""};
  std::size_t mismatches = 0, antisym = 0, transitivity = 0, triples = 0;
  std::string first;
  for (int d : {2, 3, 4}) {
    const Geometry g(d, 30);
    Convention flipped = Convention::standard(d);
    flipped.smaller_first[1] = !flipped.smaller_first[1];
    const Geometry mutated(d, 30, flipped);
    const Geometry& cmp = opts.mutation == Mutation::flip_y ? mutated : g;

    Rng rng(0x0dd5eedu + static_cast<std::uint64_t>(d));
    auto draw = [&] {
      std::array<std::uint64_t, kMaxDim> a{};
      for (int i = 0; i < d; ++i) a[static_cast<std::size_t>(i)] = (rng.below(std::uint64_t{1} << 29) << 1) | 1u;
      return Coord(30, std::span<const std::uint64_t>(a.data(), static_cast<std::size_t>(d)));
    };
    for (int k = 0; k < opts.order_pairs; ++k) {
      const Coord u = draw();
      Coord v = draw();
      while (v == u) v = draw();
      const Ordering uv = cmp.order_compare(u, v);
      if (uv != g.interleave_compare(u, v)) {
        if (first.empty()) first = "d=" + std::to_string(d) + " " + u.to_string() + " vs " + v.to_string();
        ++mismatches;
      }
      if (cmp.order_compare(v, u) == uv) ++antisym;
    }
    for (int k = 0; k < opts.order_pairs / 10; ++k) {
      const Coord a = draw(), b = draw(), e = draw();
      if (a == b || b == e || a == e) continue;
      ++triples;
      if (cmp.precedes(a, b) && cmp.precedes(b, e) && !cmp.precedes(a, e)) ++transitivity;
      if (cmp.precedes(e, b) && cmp.precedes(b, a) && !cmp.precedes(e, a)) ++transitivity;
    }
  }
  c.pass = mismatches == 0 && antisym == 0 && transitivity == 0;
  c.detail = std::to_string(opts.order_pairs) + " pairs per d in {2,3,4}: " + std::to_string(mismatches) +
             " oracle mismatches, " + std::to_string(antisym) + " antisymmetry failures, " +
             std::to_string(transitivity) + " transitivity failures over " + std::to_string(triples) +
             " triples";
  if (!first.empty()) c.detail += "; first mismatch " + first;
  return c;
}

/// Negative control: a node whose right neighbour is pushed one position
/// further away loses a Q(v) region, and the monitor must notice.
bool q_shrink_control_fires(std::string& note) {
  ScenarioConfig sc;
  sc.n = 8;
  sc.seed = 4242;
  const auto base = generate_scenario(sc);
  const Geometry& g = base.geometry;
  SystemState legit = legitimate_state(g, base.coords());

  MonitorSuite suite(legit, {});
  ScheduleConfig sch;
  sch.seed = 4242;
  Simulator sim(legit, sch);
  sim.attach(&suite);
  suite.start(sim.state());
  sim.run_round();
  sim.run_round();
  if (suite.count(ViolationKind::q_monotone) != 0) {
    note = "monitor fired before the mutation";
    return false;
  }
  auto& s = sim.mutable_state();
  for (std::size_t i = 0; i + 2 < s.size(); ++i) {
    NodeState moved = s.nodes[i];
    moved.right = s.nodes[i + 2].self;
    const auto before = local_regions(g, s.nodes[i]).quads;
    const auto after = local_regions(g, moved).quads;
    if (std::includes(after.begin(), after.end(), before.begin(), before.end())) continue;
    s.nodes[i] = moved;
    suite.on_action(sim.state(), static_cast<int>(i));
    note = "node " + std::to_string(i) + " right pointer moved past its successor";
    return suite.count(ViolationKind::q_monotone) > 0;
  }
  note = "no node offered a shrinking mutation";
  return false;
}

}  // namespace

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts) {
  using namespace std::string_literals;
  std::vector<CriterionResult> out;
  auto* log = opts.progress;

  auto ord = ordering_criterion(opts);

  const RunOptions ro = options_for(opts.mutation);
  const auto main_jobs = sweep_jobs(2, {1, 2, 3, 4, 8, 16, 32}, opts.seeds, Placement::uniform, true);
  const Tally main = run_group(main_jobs, ro, 97, log, "d=2");

  const auto hop_jobs = sweep_jobs(2, {4, 8, 16, 32, 64}, opts.hop_seeds, Placement::min_dist, false);
  const Tally hops = run_group(hop_jobs, ro, 23, log, "min-dist");

  const auto d3_jobs = sweep_jobs(3, {8, 16}, opts.d3_seeds, Placement::uniform, true);
  const Tally d3 = run_group(d3_jobs, ro, 41, log, "d=3");

  // 1
  {
    CriterionResult c{1, "convergence", false, ""};
    c.pass = main.runs > 0 && main.converged == main.runs;
    c.detail = std::to_string(main.converged) + "/" + std::to_string(main.runs) +
               " runs legitimate (d=2, n in {1,2,3,4,8,16,32}, " + std::to_string(opts.seeds) +
               " seeds, 5 init topologies, inflight=n), slowest at round " + std::to_string(main.max_round);
    if (!main.first_nonconverged.empty()) c.detail += "; first NON_CONVERGED: " + main.first_nonconverged;
    out.push_back(c);
  }
  // 2
  {
    CriterionResult c{2, "closure", false, ""};
    const auto k = ViolationKind::closure;
    c.pass = main.converged > 0 && main.count(k) == 0 && main.extra_rounds_short == 0;
    c.detail = std::to_string(main.count(k)) + " CLOSURE violations over " + std::to_string(ro.extra_rounds) +
               " extra rounds in " + std::to_string(main.converged) + " converged runs" + main.violation_note(k);
    out.push_back(c);
  }
  // 3, 4
  for (auto [id, name, k] : {std::tuple{3, "monotonic-geo", ViolationKind::monotonic_geo},
                             std::tuple{4, "monotonic-std", ViolationKind::monotonic_std}}) {
    CriterionResult c{id, name, false, ""};
    c.pass = main.searches > 0 && main.count(k) == 0;
    c.detail = std::to_string(main.count(k)) + " " + to_string(k) + " violations over " +
               std::to_string(main.searches) + " completed searches" + main.violation_note(k);
    out.push_back(c);
  }
  // 5
  {
    CriterionResult c{5, "hop-bounds", false, ""};
    const auto dist = hops.count(ViolationKind::distance_bound) + main.count(ViolationKind::distance_bound) +
                      d3.count(ViolationKind::distance_bound);
    const auto hop = hops.count(ViolationKind::hop_bound);
    c.pass = hops.searches > 0 && dist == 0 && hop == 0 && hops.converged == hops.runs;
    c.detail = std::to_string(hops.runs) + " min-dist runs, " + std::to_string(hops.searches) +
               " searches: " + std::to_string(dist) + " DISTANCE_BOUND, " + std::to_string(hop) +
               " HOP_BOUND; max hops";
    for (const auto& [n, h] : hops.max_hops_by_n) {
      c.detail += " n=" + std::to_string(n) + ":" + std::to_string(h) + "/" +
                  std::to_string(hop_limit(static_cast<std::size_t>(n)));
    }
    c.detail += hops.violation_note(ViolationKind::hop_bound) + hops.violation_note(ViolationKind::distance_bound);
    out.push_back(c);
  }
  // 6
  {
    CriterionResult c{6, "q-monotone", false, ""};
    const auto k = ViolationKind::q_monotone;
    std::string note;
    const bool fired = q_shrink_control_fires(note);
    c.pass = main.count(k) == 0 && fired;
    c.detail = std::to_string(main.count(k)) + " Q_MONOTONE violations in protocol runs; negative control " +
               (fired ? "fired"s : "did not fire"s) + " (" + note + ")" + main.violation_note(k);
    out.push_back(c);
  }
  // 7
  {
    CriterionResult c{7, "connectivity", false, ""};
    const auto k = ViolationKind::connectivity;
    c.pass = main.count(k) == 0 && main.initial_bad == 0 && main.initial_messages > 0;
    c.detail = std::to_string(main.count(k)) + " CONNECTIVITY violations; " +
               std::to_string(main.initial_messages) + " initial messages, last original delivered in round " +
               std::to_string(main.max_initial_delivery) + " (delta 3), longest verbatim forward chain " +
               std::to_string(main.max_chain) + ", " + std::to_string(main.initial_bad) +
               " runs with initial traffic left over" + main.violation_note(k);
    if (!main.first_initial_bad.empty()) c.detail += "; first: " + main.first_initial_bad;
    out.push_back(c);
  }
  // 8
  out.push_back(ord);
  // 9
  {
    CriterionResult c{9, "d3-generalization", false, ""};
    c.pass = d3.runs > 0 && d3.converged == d3.runs && d3.total() == 0 && d3.searches > 0;
    c.detail = std::to_string(d3.converged) + "/" + std::to_string(d3.runs) +
               " d=3 runs legitimate (n in {8,16}, " + std::to_string(opts.d3_seeds) +
               " seeds, 5 init topologies), slowest at round " + std::to_string(d3.max_round) + ", " +
               std::to_string(d3.total()) + " violations";
    for (std::size_t k = 0; k < kViolationKinds; ++k) {
      if (!d3.first_violation[k].empty()) {
        c.detail += "; first " + std::string(to_string(static_cast<ViolationKind>(k))) + ": " + d3.first_violation[k];
        break;
      }
    }
    if (!d3.first_nonconverged.empty()) c.detail += "; first NON_CONVERGED: " + d3.first_nonconverged;
    out.push_back(c);
  }
  // 10
  {
    CriterionResult c{10, "determinism", true, ""};
    std::size_t replayed = 0, differing = 0;
    std::string first;
    for (const Tally* t : {&main, &hops, &d3}) {
      for (const auto& rp : t->replays) {
        ++replayed;
        const auto again = run_experiment(rp.job.scenario, rp.job.schedule, ro);
        if (again.trace_hash != rp.hash || stable_report(again) != rp.report) {
          ++differing;
          if (first.empty()) first = label(rp.job.scenario, rp.job.schedule);
        }
      }
    }
    c.pass = replayed > 0 && differing == 0;
    c.detail = std::to_string(replayed) + " runs replayed, " + std::to_string(differing) +
               " with a different trace hash or report";
    if (!first.empty()) c.detail += "; first: " + first;
    out.push_back(c);
  }
  return out;
}

}  // namespace quadstab
