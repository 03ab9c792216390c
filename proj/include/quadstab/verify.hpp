#pragma once

// Global oracles and online monitors: legitimacy, closure, monotonic
// searchability (geographic and standard), Q(v) growth, weak connectivity
// and search-path bounds.

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "quadstab/sim.hpp"

namespace quadstab {

enum class ViolationKind {
  legitimacy,
  closure,
  monotonic_geo,
  monotonic_std,
  q_monotone,
  connectivity,
  hop_bound,
  distance_bound,
};
inline constexpr std::size_t kViolationKinds = 8;
const char* to_string(ViolationKind k);

struct Violation {
  ViolationKind kind;
  int round = 0;
  std::string details;
};

/// Division over all nodes, with the derived order and per-node A(v)/Q(v).
class GlobalOracle {
 public:
  GlobalOracle(const Geometry& g, std::span<const Coord> nodes);

  const DivisionTree& tree() const { return tree_; }
  const std::vector<Coord>& order() const { return order_; }
  /// A(v), Q(v) of node at overlay index i.
  const LocalRegions& regions(std::size_t i) const { return regions_[i]; }
  /// Whether some node lies in r.
  bool occupied(const Region& r) const;

  /// Inhabitant of the leaf containing target, if any.
  std::optional<Coord> search_answer(const Coord& target) const;

 private:
  DivisionTree tree_;
  std::vector<Coord> order_;
  std::vector<LocalRegions> regions_;
};

DivisionTree global_tree(const Geometry& g, std::span<const Coord> nodes);
std::optional<Coord> oracle_search_answer(const Geometry& g, std::span<const Coord> nodes,
                                          const Coord& target);

/// Empty when legitimate; otherwise one LEGITIMACY violation per offending node.
std::vector<Violation> check_legitimate(const SystemState& s, const GlobalOracle& oracle);
std::vector<Violation> check_legitimate(const SystemState& s);
bool is_legitimate(const SystemState& s, const GlobalOracle& oracle);
bool is_legitimate(const SystemState& s);

/// Builds a legitimate state directly: list from the order, Q holding the
/// overlay-smallest inhabitant of each occupied Q(v) region. Mailboxes empty.
SystemState legitimate_state(const Geometry& g, std::vector<Coord> coords);

// ---------------------------------------------------------------------------
// Searchability

struct SearchOutcome {
  int round = 0;
  Coord result;
  int hops = 0;
};

class SearchLedger {
 public:
  struct Entry {
    std::optional<Coord> oracle;
    bool target_is_node = false;
    bool oracle_seen = false;       // oracle answer returned at least once
    bool target_node_seen = false;  // target node returned at least once
    std::optional<Coord> settled;   // first result after convergence
    std::vector<SearchOutcome> history;
  };

  const std::map<SearchKey, Entry>& entries() const { return entries_; }
  Entry& entry(const SearchKey& key, const GlobalOracle& oracle, const SystemState& s);

 private:
  std::map<SearchKey, Entry> entries_;
};

/// Records a termination and returns any monotonicity violations it causes.
/// `converged` marks terminations after the run first reached legitimacy.
std::vector<Violation> monitor_searchability(SearchLedger& ledger, const GlobalOracle& oracle,
                                             const SystemState& s, const SearchTermination& t,
                                             bool converged);

/// Q_MONOTONE violation when an earlier Q(v) is not contained in a later one.
std::optional<Violation> monitor_q_monotone(const std::vector<Region>& before,
                                            const std::vector<Region>& after, int round,
                                            const Coord& node);

/// CONNECTIVITY violation when explicit plus implicit edges split.
std::optional<Violation> monitor_connectivity(const SystemState& s);

/// Squared bound (grid units) on the distance from the node reached after k
/// hops to the target: the diagonal of a depth-k region.
uint128 hop_distance_bound_squared(const Geometry& g, int k);
/// 4 * ceil(log2 n) + 2.
int hop_limit(std::size_t n);

/// Per-hop distance checks; hop-count check only when hop_limit_applies.
std::vector<Violation> monitor_hops(const Geometry& g, const SearchTermination& t, std::size_t n,
                                    bool hop_limit_applies, int round);

// ---------------------------------------------------------------------------
// Online suite

struct MonitorOptions {
  bool hop_limit = false;  // the scenario has 1/n-separated nodes
  bool closure = true;
};

class MonitorSuite : public SimObserver {
 public:
  MonitorSuite(const SystemState& initial, MonitorOptions opts);

  /// Round-0 checks; call once before running.
  void start(const SystemState& s);

  void on_action(const SystemState& s, int node) override;
  void on_search_end(const SystemState& s, const SearchTermination& t) override;
  void on_round_end(const SystemState& s) override;

  const GlobalOracle& oracle() const { return oracle_; }
  const SearchLedger& ledger() const { return ledger_; }

  std::optional<int> converged_round() const { return converged_round_; }
  bool legitimate_now() const { return legitimate_now_; }

  const std::vector<Violation>& violations() const { return violations_; }
  std::array<std::size_t, kViolationKinds> counts() const;
  std::size_t count(ViolationKind k) const { return counts()[static_cast<std::size_t>(k)]; }

  int max_hops() const { return max_hops_; }
  const std::map<int, std::size_t>& hop_histogram() const { return hops_; }
  std::size_t searches_completed() const { return searches_; }

 private:
  void report(Violation v);
  void check_round(const SystemState& s);

  MonitorOptions opts_;
  GlobalOracle oracle_;
  SearchLedger ledger_;
  std::vector<std::vector<Region>> last_q_;
  std::vector<bool> have_q_;

  std::optional<int> converged_round_;
  bool legitimate_now_ = false;
  std::vector<NodeState> closure_snapshot_;

  std::vector<Violation> violations_;
  std::array<std::size_t, kViolationKinds> counts_{};
  int max_hops_ = 0;
  std::map<int, std::size_t> hops_;
  std::size_t searches_ = 0;
};

}  // namespace quadstab
