#include "quadstab/verify.hpp"

#include <algorithm>

namespace quadstab {

const char* to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::legitimacy: return "LEGITIMACY";
    case ViolationKind::closure: return "CLOSURE";
    case ViolationKind::monotonic_geo: return "MONOTONIC_GEO";
    case ViolationKind::monotonic_std: return "MONOTONIC_STD";
    case ViolationKind::q_monotone: return "Q_MONOTONE";
    case ViolationKind::connectivity: return "CONNECTIVITY";
    case ViolationKind::hop_bound: return "HOP_BOUND";
    case ViolationKind::distance_bound: return "DISTANCE_BOUND";
  }
  return "?";
}

DivisionTree global_tree(const Geometry& g, std::span<const Coord> nodes) {
  if (nodes.empty()) throw SpaceError("global tree needs at least one node");
  return g.quad_division(nodes);
}

GlobalOracle::GlobalOracle(const Geometry& g, std::span<const Coord> nodes)
    : tree_(global_tree(g, nodes)), order_(tree_.ordered_points()) {
  regions_.reserve(order_.size());
  for (const auto& v : order_) regions_.push_back(regions_in_tree(tree_, v));
}

bool GlobalOracle::occupied(const Region& r) const {
  return std::any_of(order_.begin(), order_.end(), [&](const Coord& c) { return r.contains(c); });
}

std::optional<Coord> GlobalOracle::search_answer(const Coord& target) const {
  const auto& leaf = tree_.nodes()[static_cast<std::size_t>(tree_.locate(target))];
  if (!leaf.point) return std::nullopt;
  return tree_.points()[static_cast<std::size_t>(*leaf.point)];
}

std::optional<Coord> oracle_search_answer(const Geometry& g, std::span<const Coord> nodes,
                                          const Coord& target) {
  return GlobalOracle(g, nodes).search_answer(target);
}

namespace {

std::string describe(const std::optional<Coord>& c) { return c ? c->to_string() : "ABSENT"; }

}  // namespace

std::vector<Violation> check_legitimate(const SystemState& s, const GlobalOracle& oracle) {
  std::vector<Violation> out;
  const auto& order = oracle.order();
  const std::size_t n = order.size();
  auto fail = [&](std::size_t i, std::string what) {
    out.push_back({ViolationKind::legitimacy, s.round_counter,
                   "node " + std::to_string(i) + " " + order[i].to_string() + ": " + what});
  };

  for (std::size_t i = 0; i < n; ++i) {
    const auto& st = s.nodes[i];
    if (st.self != order[i]) {
      fail(i, "state out of overlay order");
      continue;
    }
    const std::optional<Coord> left = i > 0 ? std::optional<Coord>(order[i - 1]) : std::nullopt;
    const std::optional<Coord> right = i + 1 < n ? std::optional<Coord>(order[i + 1]) : std::nullopt;
    if (st.left != left) fail(i, "left is " + describe(st.left) + ", expected " + describe(left));
    if (st.right != right) fail(i, "right is " + describe(st.right) + ", expected " + describe(right));

    const auto& lr = oracle.regions(i);
    std::vector<int> members(lr.quads.size(), 0);
    for (const auto& m : st.q) {
      auto it = std::find_if(lr.quads.begin(), lr.quads.end(),
                             [&](const Region& r) { return r.contains(m); });
      if (it == lr.quads.end()) {
        fail(i, "quad edge " + m.to_string() + " outside Q(v)");
      } else {
        members[static_cast<std::size_t>(it - lr.quads.begin())]++;
      }
    }
    for (std::size_t k = 0; k < lr.quads.size(); ++k) {
      const int expected = oracle.occupied(lr.quads[k]) ? 1 : 0;
      if (members[k] != expected) {
        fail(i, "region " + lr.quads[k].path() + " has " + std::to_string(members[k]) +
                    " quad edges, expected " + std::to_string(expected));
      }
    }
  }
  return out;
}

std::vector<Violation> check_legitimate(const SystemState& s) {
  const auto coords = s.coords();
  return check_legitimate(s, GlobalOracle(s.geometry, coords));
}

bool is_legitimate(const SystemState& s, const GlobalOracle& oracle) {
  return check_legitimate(s, oracle).empty();
}

bool is_legitimate(const SystemState& s) { return check_legitimate(s).empty(); }

SystemState legitimate_state(const Geometry& g, std::vector<Coord> coords) {
  SystemState s(g, std::move(coords));
  const auto all = s.coords();
  const GlobalOracle oracle(g, all);
  const auto& order = oracle.order();
  for (std::size_t i = 0; i < order.size(); ++i) {
    auto& st = s.nodes[i];
    if (i > 0) st.left = order[i - 1];
    if (i + 1 < order.size()) st.right = order[i + 1];
    for (const auto& r : oracle.regions(i).quads) {
      auto it = std::find_if(order.begin(), order.end(), [&](const Coord& c) { return r.contains(c); });
      if (it != order.end()) st.q.push_back(*it);
    }
    std::sort(st.q.begin(), st.q.end(), [&](const Coord& a, const Coord& b) { return g.precedes(a, b); });
  }
  return s;
}

// ---------------------------------------------------------------------------

SearchLedger::Entry& SearchLedger::entry(const SearchKey& key, const GlobalOracle& oracle,
                                         const SystemState& s) {
  auto [it, fresh] = entries_.try_emplace(key);
  if (fresh) {
    it->second.oracle = oracle.search_answer(key.target);
    it->second.target_is_node = s.index_of(key.target) >= 0;
  }
  return it->second;
}

std::vector<Violation> monitor_searchability(SearchLedger& ledger, const GlobalOracle& oracle,
                                             const SystemState& s, const SearchTermination& t,
                                             bool converged) {
  std::vector<Violation> out;
  auto& e = ledger.entry({t.initiator, t.target}, oracle, s);
  const int round = s.round_counter;
  auto detail = [&](const Coord& expected) {
    return "search " + std::to_string(t.request_id) + " from " + t.initiator.to_string() + " for " +
           t.target.to_string() + " returned " + t.result.to_string() + " after " +
           expected.to_string() + " had been returned";
  };

  if (e.oracle) {
    if (e.oracle_seen && t.result != *e.oracle) {
      out.push_back({ViolationKind::monotonic_geo, round, detail(*e.oracle)});
    }
    if (t.result == *e.oracle) e.oracle_seen = true;
  } else if (converged) {
    // Empty-leaf target: no canonical answer, but from legitimacy on the
    // edges are frozen and the result must not change.
    if (e.settled && t.result != *e.settled) {
      out.push_back({ViolationKind::monotonic_geo, round, detail(*e.settled)});
    }
    if (!e.settled) e.settled = t.result;
  }

  if (e.target_is_node) {
    if (e.target_node_seen && t.result != t.target) {
      out.push_back({ViolationKind::monotonic_std, round, detail(t.target)});
    }
    if (t.result == t.target) e.target_node_seen = true;
  }

  e.history.push_back({round, t.result, t.hops});
  return out;
}

std::optional<Violation> monitor_q_monotone(const std::vector<Region>& before,
                                            const std::vector<Region>& after, int round,
                                            const Coord& node) {
  if (std::includes(after.begin(), after.end(), before.begin(), before.end())) return std::nullopt;
  std::string lost;
  for (const auto& r : before) {
    if (!std::binary_search(after.begin(), after.end(), r)) lost += " " + (r.path().empty() ? "*" : r.path());
  }
  return Violation{ViolationKind::q_monotone, round, "Q(v) of " + node.to_string() + " lost" + lost};
}

std::optional<Violation> monitor_connectivity(const SystemState& s) {
  const auto label = weak_components(s);
  std::vector<int> split;
  for (std::size_t i = 0; i < label.size(); ++i) {
    if (label[i] != 0) split.push_back(static_cast<int>(i));
  }
  if (split.empty()) return std::nullopt;
  std::string nodes;
  for (std::size_t i = 0; i < split.size() && i < 8; ++i) nodes += " " + std::to_string(split[i]);
  return Violation{ViolationKind::connectivity, s.round_counter,
                   std::to_string(split.size()) + " node(s) disconnected from node 0:" + nodes};
}

uint128 hop_distance_bound_squared(const Geometry& g, int k) {
  const int d = g.dim();
  uint128 sum = 0;
  for (int i = 0; i < d; ++i) {
    const int level = std::min(k / d + (i < k % d ? 1 : 0), g.bits());
    sum += static_cast<uint128>(1) << (2 * (g.bits() - level));
  }
  return sum;
}

int hop_limit(std::size_t n) {
  int ceil_log = 0;
  while ((std::size_t{1} << ceil_log) < n) ++ceil_log;
  return 4 * ceil_log + 2;
}

std::vector<Violation> monitor_hops(const Geometry& g, const SearchTermination& t, std::size_t n,
                                    bool hop_limit_applies, int round) {
  std::vector<Violation> out;
  if (t.trail.size() != static_cast<std::size_t>(t.hops) + 1) {
    out.push_back({ViolationKind::distance_bound, round,
                   "search " + std::to_string(t.request_id) + " trail length " +
                       std::to_string(t.trail.size()) + " does not match " + std::to_string(t.hops) +
                       " hops"});
    return out;
  }
  for (int k = 0; k <= t.hops; ++k) {
    const auto& at = t.trail[static_cast<std::size_t>(k)];
    if (distance_squared(at, t.target) > hop_distance_bound_squared(g, k)) {
      out.push_back({ViolationKind::distance_bound, round,
                     "search " + std::to_string(t.request_id) + " at hop " + std::to_string(k) +
                         ": node " + at.to_string() + " too far from target " +
                         t.target.to_string()});
    }
  }
  if (hop_limit_applies && t.hops > hop_limit(n)) {
    out.push_back({ViolationKind::hop_bound, round,
                   "search " + std::to_string(t.request_id) + " took " + std::to_string(t.hops) +
                       " hops, limit " + std::to_string(hop_limit(n))});
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

bool list_consistent(const Geometry& g, const NodeState& s) {
  if (s.left && (*s.left == s.self || !g.precedes(*s.left, s.self))) return false;
  if (s.right && (*s.right == s.self || !g.precedes(s.self, *s.right))) return false;
  return true;
}

bool same_edges(const NodeState& a, const NodeState& b) {
  return a.left == b.left && a.right == b.right && a.q == b.q;
}

std::vector<Coord> coords_of(const SystemState& s) { return s.coords(); }

}  // namespace

MonitorSuite::MonitorSuite(const SystemState& initial, MonitorOptions opts)
    : opts_(opts),
      oracle_(initial.geometry, coords_of(initial)),
      last_q_(initial.size()),
      have_q_(initial.size(), false) {}

void MonitorSuite::report(Violation v) {
  counts_[static_cast<std::size_t>(v.kind)]++;
  if (violations_.size() < 64) violations_.push_back(std::move(v));
}

std::array<std::size_t, kViolationKinds> MonitorSuite::counts() const { return counts_; }

void MonitorSuite::check_round(const SystemState& s) {
  if (auto v = monitor_connectivity(s)) report(std::move(*v));
  if (converged_round_) return;
  legitimate_now_ = is_legitimate(s, oracle_);
  if (legitimate_now_) {
    converged_round_ = s.round_counter;
    closure_snapshot_ = s.nodes;
  }
}

void MonitorSuite::start(const SystemState& s) { check_round(s); }

void MonitorSuite::on_round_end(const SystemState& s) { check_round(s); }

void MonitorSuite::on_action(const SystemState& s, int node) {
  const auto i = static_cast<std::size_t>(node);
  const auto& st = s.nodes[i];
  if (list_consistent(s.geometry, st)) {
    auto q = local_regions(s.geometry, st).quads;
    if (have_q_[i]) {
      if (auto v = monitor_q_monotone(last_q_[i], q, s.round_counter, st.self)) report(std::move(*v));
    }
    last_q_[i] = std::move(q);
    have_q_[i] = true;
  }
  if (opts_.closure && converged_round_ && !same_edges(closure_snapshot_[i], st)) {
    report({ViolationKind::closure, s.round_counter,
            "node " + std::to_string(node) + " " + st.self.to_string() +
                " changed its explicit edges after convergence"});
    closure_snapshot_[i] = st;
  }
}

void MonitorSuite::on_search_end(const SystemState& s, const SearchTermination& t) {
  ++searches_;
  max_hops_ = std::max(max_hops_, t.hops);
  hops_[t.hops]++;
  for (auto& v : monitor_searchability(ledger_, oracle_, s, t, converged_round_.has_value())) {
    report(std::move(v));
  }
  for (auto& v : monitor_hops(s.geometry, t, s.size(), opts_.hop_limit, s.round_counter)) {
    report(std::move(v));
  }
}

}  // namespace quadstab
