#pragma once

// Per-node state machine of the quadtree overlay: list linearization,
// quad-edge maintenance, and quad routing. Every handler is a pure function
// from (state, input) to Effects; local calls run synchronously inside the
// same action.

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "quadstab/space.hpp"

namespace quadstab {

struct NodeState {
  Coord self;
  std::optional<Coord> left;
  std::optional<Coord> right;
  std::vector<Coord> q;  // quad edges, kept in overlay order after sanitation
  std::uint64_t rr_q = 0;
  std::uint64_t rr_area = 0;

  explicit NodeState(Coord c = {}) : self(c) {}

  friend bool operator==(const NodeState&, const NodeState&) = default;
};

struct Linearize {
  Coord w;
  friend bool operator==(const Linearize&, const Linearize&) = default;
};

struct QLinearize {
  Coord w;
  std::optional<Region> area;
  friend bool operator==(const QLinearize&, const QLinearize&) = default;
};

/// Routed request. hops and trail are instrumentation only.
struct Search {
  Coord initiator;
  Coord target;
  std::uint64_t request_id = 0;
  int hops = 0;
  std::vector<Coord> trail;
  friend bool operator==(const Search&, const Search&) = default;
};

struct SearchResult {
  std::uint64_t request_id = 0;
  Coord result;
  friend bool operator==(const SearchResult&, const SearchResult&) = default;
};

using Message = std::variant<Linearize, QLinearize, Search, SearchResult>;

enum class MessageKind { linearize, qlinearize, search, search_result };
inline MessageKind kind_of(const Message& m) { return static_cast<MessageKind>(m.index()); }
const char* kind_name(MessageKind k);

struct Envelope {
  Coord to;
  Message message;
  friend bool operator==(const Envelope&, const Envelope&) = default;
};

struct SearchTermination {
  std::uint64_t request_id = 0;
  Coord initiator;
  Coord target;
  Coord result;
  int hops = 0;
  std::vector<Coord> trail;
};

struct Effects {
  NodeState state;
  std::vector<Envelope> outbound;
  std::optional<SearchTermination> terminal;
};

// Consistency checks. sanitize_quad expects an already list-consistent state.
Effects sanitize_list(const Geometry& g, NodeState s);
Effects sanitize_quad(const Geometry& g, NodeState s);

Effects handle_list_timeout(const Geometry& g, NodeState s);
Effects handle_linearize(const Geometry& g, NodeState s, const Coord& w);
Effects handle_quad_timeout(const Geometry& g, NodeState s);
Effects handle_qlinearize(const Geometry& g, NodeState s, const Coord& w,
                          const std::optional<Region>& area);
Effects handle_search(const Geometry& g, NodeState s, Search m);

/// The Timeout action: list timeout then quad timeout, one atomic step.
Effects handle_timeout(const Geometry& g, NodeState s);

/// Dispatches a delivered message. SearchResult is consumed without effect.
Effects handle_message(const Geometry& g, NodeState s, const Message& m);

/// A(v), Q(v) for a list-consistent state.
LocalRegions local_regions(const Geometry& g, const NodeState& s);

}  // namespace quadstab
