#pragma once

// One seeded experiment with every monitor attached.

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "quadstab/sim.hpp"
#include "quadstab/verify.hpp"

namespace quadstab {

struct RunOptions {
  int extra_rounds = 100;        // rounds kept running after convergence
  std::optional<bool> hop_limit; // default: on for min-dist placement
  bool closure = true;
  bool keep_trace = false;
  /// Fault injection: called once on the first legitimate state, before the
  /// extra rounds.
  std::function<void(SystemState&)> on_converged;
};

struct RunReport {
  ScenarioConfig scenario;
  ScheduleConfig schedule;
  int max_rounds = 0;

  std::optional<int> converged_round;
  int rounds_run = 0;

  std::array<std::size_t, kViolationKinds> violations{};
  std::vector<Violation> violation_samples;  // first few, in detection order

  int max_hops = 0;
  std::map<int, std::size_t> hop_histogram;
  std::size_t searches_completed = 0;
  std::vector<RoundCounts> message_counts;  // per round, index 0 = round 1

  std::uint64_t trace_hash = 0;
  std::size_t initial_messages = 0;
  int last_initial_delivery_round = 0;
  int max_initial_chain = 0;
  std::size_t initial_lineage_open = 0;  // verbatim copies still in flight at the end

  double wall_seconds = 0.0;

  bool converged() const { return converged_round.has_value(); }
  std::size_t total_violations() const;
  std::size_t count(ViolationKind k) const { return violations[static_cast<std::size_t>(k)]; }
  /// Every initial in-flight message was delivered by round delta and no
  /// verbatim copy of one is still travelling at the end of the run.
  bool initial_messages_consumed() const;
};

/// Everything a run leaves behind besides the report.
struct RunArtifacts {
  SystemState final_state;
  std::vector<std::string> trace;
};

RunReport run_experiment(const ScenarioConfig& scenario, const ScheduleConfig& schedule,
                         const RunOptions& opts = {}, RunArtifacts* artifacts = nullptr);

/// Same as above on a prepared initial state (scenario is echoed only).
RunReport run_experiment(SystemState initial, const ScenarioConfig& scenario,
                         const ScheduleConfig& schedule, const RunOptions& opts = {},
                         RunArtifacts* artifacts = nullptr);

}  // namespace quadstab
