#include "quadstab/runner.hpp"

#include <chrono>
#include <numeric>

namespace quadstab {

std::size_t RunReport::total_violations() const {
  return std::accumulate(violations.begin(), violations.end(), std::size_t{0});
}

bool RunReport::initial_messages_consumed() const {
  return last_initial_delivery_round <= schedule.delta && initial_lineage_open == 0;
}

RunReport run_experiment(const ScenarioConfig& scenario, const ScheduleConfig& schedule,
                         const RunOptions& opts, RunArtifacts* artifacts) {
  return run_experiment(generate_scenario(scenario), scenario, schedule, opts, artifacts);
}

RunReport run_experiment(SystemState initial, const ScenarioConfig& scenario,
                         const ScheduleConfig& schedule, const RunOptions& opts,
                         RunArtifacts* artifacts) {
  const auto t0 = std::chrono::steady_clock::now();

  RunReport r;
  r.scenario = scenario;
  r.schedule = schedule;

  MonitorOptions mo;
  mo.hop_limit = opts.hop_limit.value_or(scenario.placement == Placement::min_dist);
  mo.closure = opts.closure;
  MonitorSuite suite(initial, mo);

  Simulator sim(std::move(initial), schedule);
  sim.keep_trace(opts.keep_trace || artifacts != nullptr);
  sim.attach(&suite);
  r.max_rounds = sim.max_rounds();
  r.initial_messages = sim.initial_pending();

  suite.start(sim.state());
  const auto outcome = sim.run_until([&](const SystemState&) { return suite.converged_round().has_value(); });
  if (outcome.converged) {
    if (opts.on_converged) opts.on_converged(sim.mutable_state());
    for (int k = 0; k < opts.extra_rounds; ++k) sim.run_round();
  }

  r.converged_round = suite.converged_round();
  r.rounds_run = sim.state().round_counter;
  r.violations = suite.counts();
  r.violation_samples = suite.violations();
  r.max_hops = suite.max_hops();
  r.hop_histogram = suite.hop_histogram();
  r.searches_completed = suite.searches_completed();
  r.message_counts = sim.round_counts();
  r.trace_hash = sim.trace_hash();
  r.last_initial_delivery_round = sim.last_initial_delivery_round();
  r.max_initial_chain = sim.max_initial_chain();
  r.initial_lineage_open = sim.initial_lineage_pending();

  if (artifacts) {
    artifacts->final_state = sim.state();
    artifacts->trace = sim.trace();
  }
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

}  // namespace quadstab
