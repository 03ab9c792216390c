#include "quadstab/wire.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

namespace quadstab {

namespace {

const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw WireError(std::string("missing field '") + key + "'");
  return j.at(key);
}

void expect_schema(const Json& j, const char* schema) {
  const auto& tag = field(j, "schema");
  if (!tag.is_string() || tag.get<std::string>() != schema) {
    throw WireError(std::string("expected schema ") + schema + ", got " + tag.dump());
  }
}

std::optional<Coord> opt_coord(const Json& j) {
  if (j.is_null()) return std::nullopt;
  return coord_from_json(j);
}

Json opt_coord_json(const std::optional<Coord>& c) { return c ? coord_to_json(*c) : Json(nullptr); }

std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

Json coord_to_json(const Coord& c) {
  Json axes = Json::array();
  for (int i = 0; i < c.dim(); ++i) axes.push_back(c.axis(i));
  return {{"bits", c.bits()}, {"axes", axes}, {"decimal", c.to_string()}};
}

Coord coord_from_json(const Json& j) {
  try {
    const int bits = field(j, "bits").get<int>();
    const auto axes = field(j, "axes").get<std::vector<std::uint64_t>>();
    return Coord(bits, std::span<const std::uint64_t>(axes));
  } catch (const Json::exception& e) {
    throw WireError(std::string("bad coordinate: ") + e.what());
  } catch (const SpaceError& e) {
    throw WireError(std::string("bad coordinate: ") + e.what());
  }
}

Json region_to_json(const std::optional<Region>& r) {
  if (!r) return nullptr;
  return r->path();
}

std::optional<Region> region_from_json(const Geometry& g, const Json& j) {
  if (j.is_null()) return std::nullopt;
  if (!j.is_string()) throw WireError("region must be an L/R string or null");
  try {
    return g.region(j.get<std::string>());
  } catch (const SpaceError& e) {
    throw WireError(std::string("bad region: ") + e.what());
  }
}

Json message_to_json(const Message& m) {
  return std::visit(
      [](const auto& msg) -> Json {
        using T = std::decay_t<decltype(msg)>;
        if constexpr (std::is_same_v<T, Linearize>) {
          return {{"type", "LINEARIZE"}, {"w", coord_to_json(msg.w)}};
        } else if constexpr (std::is_same_v<T, QLinearize>) {
          return {{"type", "QLINEARIZE"}, {"w", coord_to_json(msg.w)}, {"area", region_to_json(msg.area)}};
        } else if constexpr (std::is_same_v<T, Search>) {
          Json trail = Json::array();
          for (const auto& c : msg.trail) trail.push_back(coord_to_json(c));
          return {{"type", "SEARCH"},
                  {"initiator", coord_to_json(msg.initiator)},
                  {"target", coord_to_json(msg.target)},
                  {"request_id", msg.request_id},
                  {"hops", msg.hops},
                  {"trail", trail}};
        } else {
          return {{"type", "SEARCHRESULT"}, {"request_id", msg.request_id}, {"result", coord_to_json(msg.result)}};
        }
      },
      m);
}

Message message_from_json(const Geometry& g, const Json& j) {
  const auto type = field(j, "type").get<std::string>();
  if (type == "LINEARIZE") return Linearize{coord_from_json(field(j, "w"))};
  if (type == "QLINEARIZE") {
    return QLinearize{coord_from_json(field(j, "w")), region_from_json(g, field(j, "area"))};
  }
  if (type == "SEARCH") {
    Search s{coord_from_json(field(j, "initiator")), coord_from_json(field(j, "target")),
             field(j, "request_id").get<std::uint64_t>(), field(j, "hops").get<int>(), {}};
    for (const auto& c : field(j, "trail")) s.trail.push_back(coord_from_json(c));
    return s;
  }
  if (type == "SEARCHRESULT") {
    return SearchResult{field(j, "request_id").get<std::uint64_t>(), coord_from_json(field(j, "result"))};
  }
  throw WireError("unknown message type '" + type + "'");
}

Json node_state_to_json(const NodeState& s) {
  Json q = Json::array();
  for (const auto& c : s.q) q.push_back(coord_to_json(c));
  return {{"self", coord_to_json(s.self)},
          {"left", opt_coord_json(s.left)},
          {"right", opt_coord_json(s.right)},
          {"q", q},
          {"rr_q", s.rr_q},
          {"rr_area", s.rr_area}};
}

NodeState node_state_from_json(const Json& j) {
  NodeState s(coord_from_json(field(j, "self")));
  s.left = opt_coord(field(j, "left"));
  s.right = opt_coord(field(j, "right"));
  for (const auto& c : field(j, "q")) s.q.push_back(coord_from_json(c));
  s.rr_q = field(j, "rr_q").get<std::uint64_t>();
  s.rr_area = field(j, "rr_area").get<std::uint64_t>();
  return s;
}

Json snapshot_to_json(const SystemState& s) {
  Json convention = Json::array();
  for (int i = 0; i < s.geometry.dim(); ++i) {
    convention.push_back(s.geometry.convention().smaller_first[static_cast<std::size_t>(i)]);
  }
  Json nodes = Json::array();
  for (std::size_t i = 0; i < s.size(); ++i) {
    Json mailbox = Json::array();
    for (const auto& pm : s.mailboxes[i]) {
      mailbox.push_back({{"id", pm.id},
                         {"enqueue_round", pm.enqueue_round},
                         {"enqueue_step", pm.enqueue_step},
                         {"initial_root", pm.initial_root ? Json(*pm.initial_root) : Json(nullptr)},
                         {"verbatim_hops", pm.verbatim_hops},
                         {"message", message_to_json(pm.message)}});
    }
    Json node = node_state_to_json(s.nodes[i]);
    node["mailbox"] = mailbox;
    nodes.push_back(node);
  }
  return {{"schema", kSnapshotSchema},
          {"dimension", s.geometry.dim()},
          {"bits", s.geometry.bits()},
          {"smaller_first", convention},
          {"step_counter", s.step_counter},
          {"round_counter", s.round_counter},
          {"next_message_id", s.next_message_id},
          {"next_request_id", s.next_request_id},
          {"nodes", nodes}};
}

SystemState snapshot_from_json(const Json& j) {
  expect_schema(j, kSnapshotSchema);
  try {
    const int dim = field(j, "dimension").get<int>();
    Convention conv = Convention::standard(dim);
    const auto& sf = field(j, "smaller_first");
    if (!sf.is_array() || static_cast<int>(sf.size()) != dim) {
      throw WireError("smaller_first must list one flag per axis");
    }
    for (int i = 0; i < dim; ++i) conv.smaller_first[static_cast<std::size_t>(i)] = sf[static_cast<std::size_t>(i)].get<bool>();
    const Geometry g(dim, field(j, "bits").get<int>(), conv);

    std::vector<Coord> coords;
    for (const auto& node : field(j, "nodes")) coords.push_back(coord_from_json(field(node, "self")));
    SystemState s(g, coords);
    for (const auto& node : field(j, "nodes")) {
      NodeState ns = node_state_from_json(node);
      const auto i = static_cast<std::size_t>(s.checked_index(ns.self));
      for (const auto& c : explicit_references(ns)) g.check(c);
      s.nodes[i] = std::move(ns);
      for (const auto& pm : field(node, "mailbox")) {
        const auto& root = field(pm, "initial_root");
        s.mailboxes[i].push_back(PendingMessage{
            message_from_json(g, field(pm, "message")), field(pm, "id").get<std::uint64_t>(),
            field(pm, "enqueue_round").get<int>(), field(pm, "enqueue_step").get<std::uint64_t>(),
            root.is_null() ? std::nullopt : std::optional<std::uint64_t>(root.get<std::uint64_t>()),
            field(pm, "verbatim_hops").get<int>()});
      }
    }
    s.step_counter = field(j, "step_counter").get<std::uint64_t>();
    s.round_counter = field(j, "round_counter").get<int>();
    s.next_message_id = field(j, "next_message_id").get<std::uint64_t>();
    s.next_request_id = field(j, "next_request_id").get<std::uint64_t>();
    return s;
  } catch (const Json::exception& e) {
    throw WireError(std::string("bad snapshot: ") + e.what());
  } catch (const SpaceError& e) {
    throw WireError(std::string("bad snapshot: ") + e.what());
  } catch (const SimError& e) {
    throw WireError(std::string("bad snapshot: ") + e.what());
  }
}

std::string to_dot(const SystemState& s) {
  std::ostringstream os;
  os << "digraph overlay {\n";
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto& c = s.nodes[i].self;
    os << "  n" << i << " [label=\"" << i << "\\n" << c.to_string() << "\"";
    if (c.dim() == 2) os << ", pos=\"" << c.unit(0) * 10 << "," << c.unit(1) * 10 << "!\"";
    os << "];\n";
  }
  auto arc = [&](std::size_t from, const Coord& to, const char* kind, const char* color) {
    os << "  n" << from << " -> n" << s.index_of(to) << " [kind=" << kind << ", color=" << color << "];\n";
  };
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto& st = s.nodes[i];
    if (st.left) arc(i, *st.left, "list", "blue");
    if (st.right) arc(i, *st.right, "list", "blue");
    for (const auto& w : st.q) arc(i, w, "quad", "red");
  }
  os << "}\n";
  return os.str();
}

Json scenario_to_json(const ScenarioConfig& c) {
  Json j = {{"schema", kScenarioSchema},
            {"dimension", c.dim},
            {"bits", c.bits},
            {"seed", c.seed},
            {"n", c.n},
            {"placement", to_string(c.placement)},
            {"init_topology", to_string(c.init_topology)},
            {"init_inflight", c.init_inflight}};
  if (!c.nodes.empty()) {
    Json nodes = Json::array();
    for (const auto& p : c.nodes) nodes.push_back(coord_to_json(p));
    j["nodes"] = nodes;
  }
  return j;
}

ScenarioConfig scenario_from_json(const Json& j) {
  expect_schema(j, kScenarioSchema);
  ScenarioConfig c;
  try {
    c.dim = field(j, "dimension").get<int>();
    c.bits = j.value("bits", 30);
    c.seed = j.value("seed", std::uint64_t{1});
    c.placement = parse_placement(j.value("placement", std::string("uniform")));
    c.init_topology = parse_topology(j.value("init_topology", std::string("list-random")));
    c.init_inflight = j.value("init_inflight", 0);
    if (j.contains("nodes")) {
      for (const auto& p : j.at("nodes")) {
        // Nodes may be given in wire form or as plain unit-cube reals.
        if (p.is_array()) {
          c.nodes.push_back(Coord::from_unit(c.bits, std::span<const double>(p.get<std::vector<double>>())));
        } else {
          c.nodes.push_back(coord_from_json(p));
        }
      }
      c.n = static_cast<int>(c.nodes.size());
    } else {
      c.n = field(j, "n").get<int>();
    }
  } catch (const Json::exception& e) {
    throw WireError(std::string("bad scenario: ") + e.what());
  } catch (const SpaceError& e) {
    throw WireError(std::string("bad scenario: ") + e.what());
  } catch (const SimError& e) {
    throw WireError(std::string("bad scenario: ") + e.what());
  }
  return c;
}

Json schedule_to_json(const ScheduleConfig& c) {
  return {{"seed", c.seed},
          {"delta", c.delta},
          {"policy", to_string(c.policy)},
          {"searches_per_round", c.searches_per_round},
          {"max_rounds", c.max_rounds}};
}

void write_trace(std::ostream& os, const std::vector<std::string>& lines) {
  if (lines.empty()) return;
  os << Json{{"schema", kTraceSchema}}.dump() << '\n';
  for (const auto& l : lines) os << l << '\n';
}

Json violation_to_json(const Violation& v) {
  return {{"schema", kViolationSchema}, {"kind", to_string(v.kind)}, {"round", v.round}, {"details", v.details}};
}

Json report_to_json(const RunReport& r) {
  Json violations = Json::object();
  for (std::size_t k = 0; k < kViolationKinds; ++k) {
    violations[to_string(static_cast<ViolationKind>(k))] = r.violations[k];
  }
  Json hist = Json::object();
  for (const auto& [hops, count] : r.hop_histogram) hist[std::to_string(hops)] = count;

  std::array<std::uint64_t, 4> totals{};
  std::uint64_t timeouts = 0;
  Json per_round = Json::array();
  for (const auto& rc : r.message_counts) {
    Json row = Json::object();
    for (std::size_t k = 0; k < 4; ++k) {
      row[kind_name(static_cast<MessageKind>(k))] = rc.delivered[k];
      totals[k] += rc.delivered[k];
    }
    row["TIMEOUT"] = rc.timeouts;
    timeouts += rc.timeouts;
    per_round.push_back(row);
  }
  Json total = Json::object();
  for (std::size_t k = 0; k < 4; ++k) total[kind_name(static_cast<MessageKind>(k))] = totals[k];
  total["TIMEOUT"] = timeouts;

  return {{"schema", kReportSchema},
          {"scenario", scenario_to_json(r.scenario)},
          {"schedule", schedule_to_json(r.schedule)},
          {"max_rounds", r.max_rounds},
          {"outcome", r.converged() ? "CONVERGED" : "NON_CONVERGED"},
          {"converged_round", r.converged_round ? Json(*r.converged_round) : Json(nullptr)},
          {"rounds_run", r.rounds_run},
          {"violations", violations},
          {"max_hops", r.max_hops},
          {"hop_histogram", hist},
          {"searches_completed", r.searches_completed},
          {"message_counts", {{"total", total}, {"per_round", per_round}}},
          {"initial_messages",
           {{"count", r.initial_messages},
            {"last_delivery_round", r.last_initial_delivery_round},
            {"max_verbatim_chain", r.max_initial_chain},
            {"still_in_flight", r.initial_lineage_open}}},
          {"trace_hash", hex64(r.trace_hash)},
          {"wall_seconds", r.wall_seconds}};
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw WireError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw WireError(path + ": " + e.what());
  }
}

}  // namespace quadstab
