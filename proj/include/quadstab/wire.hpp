#pragma once

// JSON and DOT forms of coordinates, messages, states, scenarios and reports.
// Every top-level document carries a "schema" tag; field names are fixed.

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "quadstab/runner.hpp"
#include "quadstab/sim.hpp"
#include "quadstab/verify.hpp"

namespace quadstab {

using Json = nlohmann::json;

inline constexpr const char* kSnapshotSchema = "quadstab.snapshot/1";
inline constexpr const char* kScenarioSchema = "quadstab.scenario/1";
inline constexpr const char* kTraceSchema = "quadstab.trace/1";
inline constexpr const char* kReportSchema = "quadstab.report/1";
inline constexpr const char* kViolationSchema = "quadstab.violation/1";

class WireError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// {"bits": B, "axes": [..], "decimal": "(x, y)"}; "decimal" is ignored on input.
Json coord_to_json(const Coord& c);
Coord coord_from_json(const Json& j);

/// "LRL" path, null for an absent region.
Json region_to_json(const std::optional<Region>& r);
std::optional<Region> region_from_json(const Geometry& g, const Json& j);

Json message_to_json(const Message& m);
Message message_from_json(const Geometry& g, const Json& j);

Json node_state_to_json(const NodeState& s);
NodeState node_state_from_json(const Json& j);

/// Full SystemState including mailboxes and counters.
Json snapshot_to_json(const SystemState& s);
SystemState snapshot_from_json(const Json& j);

/// Explicit edges; list arcs blue, quad arcs red, told apart by the "kind" attribute.
std::string to_dot(const SystemState& s);

Json scenario_to_json(const ScenarioConfig& c);
ScenarioConfig scenario_from_json(const Json& j);

Json schedule_to_json(const ScheduleConfig& c);

/// Trace as JSON lines: a schema header, then one event per line.
/// An empty trace produces no output at all.
void write_trace(std::ostream& os, const std::vector<std::string>& lines);

Json violation_to_json(const Violation& v);
/// Run summary; wall_seconds is the only field that varies between replays.
Json report_to_json(const RunReport& r);

/// Reads a whole file; throws WireError when it cannot be opened or parsed.
Json read_json_file(const std::string& path);

}  // namespace quadstab
