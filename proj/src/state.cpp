#include <algorithm>
#include <numeric>

#include "quadstab/sim.hpp"

namespace quadstab {

SystemState::SystemState(Geometry g, std::vector<Coord> coords) : geometry(g) {
  for (const auto& c : coords) {
    geometry.check(c);
    if (!c.on_grid_interior()) {
      throw SimError("node coordinate " + c.to_string() + " has an even mantissa");
    }
  }
  std::sort(coords.begin(), coords.end());
  if (std::adjacent_find(coords.begin(), coords.end()) != coords.end()) {
    throw SimError("duplicate node coordinate");
  }
  std::sort(coords.begin(), coords.end(),
            [&](const Coord& a, const Coord& b) { return geometry.precedes(a, b); });
  nodes.reserve(coords.size());
  for (const auto& c : coords) nodes.emplace_back(c);
  mailboxes.resize(nodes.size());
  reindex();
}

void SystemState::reindex() {
  index_.clear();
  for (std::size_t i = 0; i < nodes.size(); ++i) index_.emplace(nodes[i].self, static_cast<int>(i));
}

int SystemState::index_of(const Coord& c) const {
  auto it = index_.find(c);
  return it == index_.end() ? -1 : it->second;
}

int SystemState::checked_index(const Coord& c) const {
  const int i = index_of(c);
  if (i < 0) throw SimError("reference to unknown coordinate " + c.to_string());
  return i;
}

std::vector<Coord> SystemState::coords() const {
  std::vector<Coord> out;
  out.reserve(nodes.size());
  for (const auto& n : nodes) out.push_back(n.self);
  return out;
}

std::uint64_t SystemState::enqueue(const Coord& to, Message m,
                                   std::optional<std::uint64_t> initial_root, int verbatim_hops) {
  const int i = checked_index(to);
  const std::uint64_t id = next_message_id++;
  mailboxes[static_cast<std::size_t>(i)].push_back(
      PendingMessage{std::move(m), id, round_counter, step_counter, initial_root, verbatim_hops});
  return id;
}

std::size_t SystemState::pending() const {
  std::size_t total = 0;
  for (const auto& box : mailboxes) total += box.size();
  return total;
}

bool operator==(const SystemState& a, const SystemState& b) {
  return a.geometry == b.geometry && a.nodes == b.nodes && a.mailboxes == b.mailboxes &&
         a.step_counter == b.step_counter && a.round_counter == b.round_counter &&
         a.next_message_id == b.next_message_id && a.next_request_id == b.next_request_id;
}

std::vector<Coord> explicit_references(const NodeState& s) {
  std::vector<Coord> out;
  if (s.left) out.push_back(*s.left);
  if (s.right) out.push_back(*s.right);
  out.insert(out.end(), s.q.begin(), s.q.end());
  return out;
}

std::vector<Coord> payload_references(const Message& m) {
  return std::visit(
      [](const auto& msg) -> std::vector<Coord> {
        using T = std::decay_t<decltype(msg)>;
        if constexpr (std::is_same_v<T, Linearize> || std::is_same_v<T, QLinearize>) {
          return {msg.w};
        } else if constexpr (std::is_same_v<T, Search>) {
          std::vector<Coord> out{msg.initiator};
          out.insert(out.end(), msg.trail.begin(), msg.trail.end());
          return out;
        } else {
          return {msg.result};
        }
      },
      m);
}

namespace {

struct DisjointSets {
  std::vector<int> parent;
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] =
          parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
  }
};

}  // namespace

std::vector<int> weak_components(const SystemState& s) {
  DisjointSets sets(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const int u = static_cast<int>(i);
    for (const auto& c : explicit_references(s.nodes[i])) sets.unite(u, s.checked_index(c));
    for (const auto& pm : s.mailboxes[i]) {
      for (const auto& c : payload_references(pm.message)) sets.unite(u, s.checked_index(c));
    }
  }
  std::vector<int> label(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) label[i] = sets.find(static_cast<int>(i));
  return label;
}

bool weakly_connected(const SystemState& s) {
  const auto label = weak_components(s);
  return std::all_of(label.begin(), label.end(), [](int l) { return l == 0; });
}

}  // namespace quadstab
