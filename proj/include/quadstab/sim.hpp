#pragma once

// Deterministic asynchronous execution of the overlay protocol: per-node
// unordered mailboxes, round-based fair scheduling with bounded staleness,
// scenario generation and trace recording.

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "quadstab/protocol.hpp"
#include "quadstab/rng.hpp"
#include "quadstab/space.hpp"

namespace quadstab {

class SimError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PendingMessage {
  Message message;
  std::uint64_t id = 0;
  int enqueue_round = 0;
  std::uint64_t enqueue_step = 0;
  // Genealogy: set on initial in-flight messages and on verbatim forwards of them.
  std::optional<std::uint64_t> initial_root;
  int verbatim_hops = 0;

  friend bool operator==(const PendingMessage&, const PendingMessage&) = default;
};

struct SystemState {
  Geometry geometry{2, 30};
  std::vector<NodeState> nodes;  // sorted by the overlay order
  std::vector<std::vector<PendingMessage>> mailboxes;
  std::uint64_t step_counter = 0;
  int round_counter = 0;
  std::uint64_t next_message_id = 1;
  std::uint64_t next_request_id = 1;

  SystemState() = default;
  SystemState(Geometry g, std::vector<Coord> coords);

  std::size_t size() const { return nodes.size(); }
  /// Index of the node at c, or -1.
  int index_of(const Coord& c) const;
  int checked_index(const Coord& c) const;
  std::vector<Coord> coords() const;

  /// Enqueues m for the node at `to` in the current round.
  std::uint64_t enqueue(const Coord& to, Message m, std::optional<std::uint64_t> initial_root = {},
                        int verbatim_hops = 0);
  std::size_t pending() const;

  friend bool operator==(const SystemState& a, const SystemState& b);

 private:
  void reindex();
  std::map<Coord, int> index_;
};

/// Every coordinate a node holds: left, right, Q.
std::vector<Coord> explicit_references(const NodeState& s);
/// Every coordinate carried by a message payload.
std::vector<Coord> payload_references(const Message& m);

/// Weak connectivity of explicit plus implicit edges.
bool weakly_connected(const SystemState& s);
/// Component label per node over explicit plus implicit edges.
std::vector<int> weak_components(const SystemState& s);

// ---------------------------------------------------------------------------
// Scenarios

enum class Placement { uniform, min_dist };
enum class InitTopology { list_random, quad_only, line, star, random_mixed };

struct ScenarioConfig {
  int n = 8;
  int dim = 2;
  int bits = 30;
  Placement placement = Placement::uniform;
  InitTopology init_topology = InitTopology::list_random;
  int init_inflight = 0;
  std::uint64_t seed = 1;
  std::vector<Coord> nodes;  // explicit placement; overrides n and placement when set
};

const char* to_string(Placement p);
const char* to_string(InitTopology t);
Placement parse_placement(std::string_view s);
InitTopology parse_topology(std::string_view s);

/// Builds a weakly connected initial state. Throws SimError when the
/// placement cannot be satisfied.
SystemState generate_scenario(const ScenarioConfig& cfg);

/// Exhaustive check that all pairwise distances are >= 1/n.
bool min_distance_holds(std::span<const Coord> coords, int n);

// ---------------------------------------------------------------------------
// Scheduling

enum class DeliveryPolicy { random, lifo, oldest_last };
const char* to_string(DeliveryPolicy p);
DeliveryPolicy parse_policy(std::string_view s);

struct ScheduleConfig {
  std::uint64_t seed = 1;
  int delta = 3;
  DeliveryPolicy policy = DeliveryPolicy::random;
  int searches_per_round = 2;
  int max_rounds = 0;  // 0: 200 * n
};

enum class EventKind { timeout, deliver, search_start, search_end };
const char* to_string(EventKind k);

struct TraceEvent {
  std::uint64_t step = 0;
  int round = 0;
  EventKind kind = EventKind::timeout;
  int node = -1;
  std::string message;  // summary, node references by overlay index
  std::size_t pending = 0;
};

/// One JSON object per event, no trailing newline.
std::string trace_line(const TraceEvent& e);

class SimObserver {
 public:
  virtual ~SimObserver() = default;
  virtual void on_event(const SystemState&, const TraceEvent&) {}
  /// After the effects of an action by `node` have been applied.
  virtual void on_action(const SystemState&, int /*node*/) {}
  virtual void on_search_end(const SystemState&, const SearchTermination&) {}
  virtual void on_round_end(const SystemState&) {}
};

/// Fixed pool of (initiator, target) search keys; repeats make monotonic
/// searchability observable.
struct SearchKey {
  Coord initiator;
  Coord target;
  friend auto operator<=>(const SearchKey&, const SearchKey&) = default;
};
std::vector<SearchKey> make_search_pool(const SystemState& s, std::uint64_t seed,
                                        std::size_t size = 16);

struct RoundCounts {
  std::array<std::uint64_t, 4> delivered{};  // by MessageKind
  std::uint64_t timeouts = 0;
};

struct RunOutcome {
  bool converged = false;
  int round = 0;
};

class Simulator {
 public:
  Simulator(SystemState initial, ScheduleConfig cfg);

  const SystemState& state() const { return state_; }
  /// Direct access for fault injection in tests and negative controls.
  SystemState& mutable_state() { return state_; }
  const ScheduleConfig& config() const { return cfg_; }
  int max_rounds() const;

  void attach(SimObserver* o) { observers_.push_back(o); }
  void keep_trace(bool keep) { keep_trace_ = keep; }
  void set_search_pool(std::vector<SearchKey> pool) { pool_ = std::move(pool); }
  const std::vector<SearchKey>& search_pool() const { return pool_; }

  /// Executes exactly one action, opening a new round when needed.
  TraceEvent step();
  /// Finishes the current round (or runs a whole new one).
  void run_round();
  /// Runs rounds until stop holds (checked before the first round) or max_rounds.
  RunOutcome run_until(const std::function<bool(const SystemState&)>& stop);

  std::uint64_t trace_hash() const { return hash_; }
  const std::vector<std::string>& trace() const { return lines_; }
  const std::vector<RoundCounts>& round_counts() const { return counts_; }

  // Genealogy of initial in-flight messages.
  /// Round in which the last original (not a forwarded copy) was delivered.
  int last_initial_delivery_round() const { return last_initial_round_; }
  /// Longest chain of verbatim forwards seen so far.
  int max_initial_chain() const { return max_initial_chain_; }
  /// Originals still in flight.
  std::size_t initial_pending() const;
  /// Originals plus verbatim copies still in flight.
  std::size_t initial_lineage_pending() const;

 private:
  struct Slot {
    enum Type { timeout, forced, optional } type;
    int node = -1;
    std::uint64_t message_id = 0;
  };

  void begin_round();
  bool step_in_round(TraceEvent& out);
  void end_round();
  void deliver(int node, std::size_t slot, TraceEvent& ev);
  void apply(int node, Effects fx, const std::optional<PendingMessage>& cause);
  void emit(TraceEvent& ev);
  std::string summary(const Message& m) const;

  SystemState state_;
  ScheduleConfig cfg_;
  Rng rng_;
  std::vector<SimObserver*> observers_;
  std::vector<SearchKey> pool_;

  bool in_round_ = false;
  std::vector<Slot> plan_;
  std::size_t cursor_ = 0;

  bool keep_trace_ = false;
  std::vector<std::string> lines_;
  std::uint64_t hash_ = 14695981039346656037ull;
  std::vector<RoundCounts> counts_;

  int last_initial_round_ = 0;
  int max_initial_chain_ = 0;
};

}  // namespace quadstab
