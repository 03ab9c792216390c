#include <algorithm>
#include <set>

#include "quadstab/sim.hpp"

namespace quadstab {

const char* to_string(Placement p) {
  return p == Placement::uniform ? "uniform" : "min-dist";
}

const char* to_string(InitTopology t) {
  switch (t) {
    case InitTopology::list_random: return "list-random";
    case InitTopology::quad_only: return "quad-only";
    case InitTopology::line: return "line";
    case InitTopology::star: return "star";
    case InitTopology::random_mixed: return "mixed";
  }
  return "?";
}

Placement parse_placement(std::string_view s) {
  if (s == "uniform") return Placement::uniform;
  if (s == "min-dist" || s == "min_dist") return Placement::min_dist;
  throw SimError("unknown placement '" + std::string(s) + "'");
}

InitTopology parse_topology(std::string_view s) {
  if (s == "list-random" || s == "list_random") return InitTopology::list_random;
  if (s == "quad-only" || s == "quad_only") return InitTopology::quad_only;
  if (s == "line") return InitTopology::line;
  if (s == "star") return InitTopology::star;
  if (s == "mixed" || s == "random-mixed" || s == "random_mixed") return InitTopology::random_mixed;
  throw SimError("unknown init topology '" + std::string(s) + "'");
}

bool min_distance_holds(std::span<const Coord> coords, int n) {
  if (coords.size() < 2) return true;
  const int bits = coords.front().bits();
  // dist >= 1/n  <=>  dist^2 >= ceil(2^{2 bits} / n^2) in grid units.
  const uint128 scale = static_cast<uint128>(1) << (2 * bits);
  const uint128 nn = static_cast<uint128>(n) * static_cast<unsigned>(n);
  const uint128 need = (scale + nn - 1) / nn;
  for (std::size_t i = 0; i < coords.size(); ++i) {
    for (std::size_t j = i + 1; j < coords.size(); ++j) {
      if (distance_squared(coords[i], coords[j]) < need) return false;
    }
  }
  return true;
}

namespace {

Coord random_coord(const Geometry& g, Rng& rng) {
  std::array<std::uint64_t, kMaxDim> axes{};
  const std::uint64_t half = std::uint64_t{1} << (g.bits() - 1);
  for (int i = 0; i < g.dim(); ++i) {
    axes[static_cast<std::size_t>(i)] = (rng.below(half) << 1) | 1u;
  }
  return Coord(g.bits(), std::span<const std::uint64_t>(axes.data(), static_cast<std::size_t>(g.dim())));
}

std::vector<Coord> place(const Geometry& g, const ScenarioConfig& cfg, Rng& rng) {
  std::vector<Coord> out;
  std::set<Coord> seen;
  const auto n = static_cast<std::size_t>(cfg.n);
  if (cfg.placement == Placement::uniform) {
    while (out.size() < n) {
      Coord c = random_coord(g, rng);
      if (seen.insert(c).second) out.push_back(c);
    }
    return out;
  }

  // Dart throwing with exact separation tests.
  const std::size_t budget = 20000 * std::max<std::size_t>(n, 1);
  for (std::size_t attempt = 0; out.size() < n; ++attempt) {
    if (attempt >= budget) {
      throw SimError("min-dist placement unsatisfiable for n=" + std::to_string(cfg.n) +
                     " d=" + std::to_string(cfg.dim));
    }
    Coord c = random_coord(g, rng);
    out.push_back(c);
    if (!min_distance_holds(out, cfg.n) || !seen.insert(c).second) out.pop_back();
  }
  return out;
}

Region random_region(const Geometry& g, Rng& rng) {
  Region r = g.root();
  const int depth = 1 + static_cast<int>(rng.below(4));
  for (int k = 0; k < depth; ++k) r = g.child(r, rng.coin() ? Side::left : Side::right);
  return r;
}

// Puts `ref` into one of holder's free list slots; false if both are taken.
bool take_list_slot(NodeState& holder, const Coord& ref, Rng& rng) {
  const bool prefer_left = rng.coin();
  auto& first = prefer_left ? holder.left : holder.right;
  auto& second = prefer_left ? holder.right : holder.left;
  if (!first) {
    first = ref;
    return true;
  }
  if (!second) {
    second = ref;
    return true;
  }
  return false;
}

void wire(SystemState& s, const ScenarioConfig& cfg, Rng& rng) {
  const std::size_t n = s.size();
  if (n < 2) return;
  std::vector<int> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = static_cast<int>(i);
  rng.shuffle(perm);

  auto node = [&](int i) -> NodeState& { return s.nodes[static_cast<std::size_t>(i)]; };
  auto coord = [&](int i) { return s.nodes[static_cast<std::size_t>(i)].self; };

  // Random spanning tree over perm: every later node hangs off an earlier one.
  std::vector<std::pair<int, int>> tree;
  for (std::size_t i = 1; i < n; ++i) {
    tree.emplace_back(perm[i], perm[rng.below(i)]);
  }

  switch (cfg.init_topology) {
    case InitTopology::list_random: {
      for (auto [a, b] : tree) {
        if (rng.coin()) std::swap(a, b);
        if (!take_list_slot(node(a), coord(b), rng) && !take_list_slot(node(b), coord(a), rng)) {
          s.enqueue(coord(a), Linearize{coord(b)});
        }
      }
      for (std::size_t i = 0; i < n; ++i) {
        if (rng.coin()) {
          const int other = static_cast<int>(rng.below(n));
          if (other != static_cast<int>(i)) take_list_slot(node(static_cast<int>(i)), coord(other), rng);
        }
      }
      break;
    }
    case InitTopology::quad_only: {
      for (auto [a, b] : tree) {
        if (rng.coin()) std::swap(a, b);
        node(a).q.push_back(coord(b));
      }
      for (std::size_t k = 0; k < n / 2; ++k) {
        const int a = static_cast<int>(rng.below(n)), b = static_cast<int>(rng.below(n));
        if (a != b) node(a).q.push_back(coord(b));
      }
      break;
    }
    case InitTopology::line: {
      for (std::size_t i = 0; i + 1 < n; ++i) {
        node(perm[i]).right = coord(perm[i + 1]);
        node(perm[i + 1]).left = coord(perm[i]);
      }
      break;
    }
    case InitTopology::star: {
      const int center = perm[0];
      for (std::size_t i = 1; i < n; ++i) {
        auto& leaf = node(perm[i]);
        switch (rng.below(3)) {
          case 0: leaf.left = coord(center); break;
          case 1: leaf.right = coord(center); break;
          default: leaf.q.push_back(coord(center)); break;
        }
      }
      break;
    }
    case InitTopology::random_mixed: {
      auto place_edge = [&](int a, int b, bool may_fly) {
        const auto pick = rng.below(4);
        if (may_fly && pick == 0) {
          if (rng.coin()) {
            s.enqueue(coord(a), Linearize{coord(b)});
          } else {
            s.enqueue(coord(a), QLinearize{coord(b), std::nullopt});
          }
        } else if (pick == 1 || !take_list_slot(node(a), coord(b), rng)) {
          node(a).q.push_back(coord(b));
        }
      };
      for (auto [a, b] : tree) {
        if (rng.coin()) std::swap(a, b);
        place_edge(a, b, true);
      }
      for (std::size_t k = 0; k < n / 2; ++k) {
        const int a = static_cast<int>(rng.below(n)), b = static_cast<int>(rng.below(n));
        if (a != b) place_edge(a, b, false);
      }
      break;
    }
  }

  for (auto& ns : s.nodes) {
    ns.rr_q = rng.below(16);
    ns.rr_area = rng.below(16);
  }
}

}  // namespace

SystemState generate_scenario(const ScenarioConfig& cfg) {
  const Geometry g(cfg.dim, cfg.bits);
  Rng rng(cfg.seed);
  std::vector<Coord> coords = cfg.nodes;
  if (coords.empty()) {
    if (cfg.n < 1) throw SimError("scenario needs n >= 1");
    coords = place(g, cfg, rng);
  }
  SystemState s(g, std::move(coords));
  wire(s, cfg, rng);

  // Corrupted in-flight messages: arbitrary payloads over existing nodes.
  const std::size_t n = s.size();
  for (int k = 0; k < cfg.init_inflight && n > 0; ++k) {
    const auto& to = s.nodes[rng.below(n)].self;
    const auto& w = s.nodes[rng.below(n)].self;
    switch (rng.below(3)) {
      case 0: s.enqueue(to, Linearize{w}); break;
      case 1: s.enqueue(to, QLinearize{w, std::nullopt}); break;
      default: s.enqueue(to, QLinearize{w, random_region(g, rng)}); break;
    }
  }
  for (auto& box : s.mailboxes) {
    for (auto& pm : box) {
      pm.initial_root = pm.id;
    }
  }

  if (!weakly_connected(s)) {
    throw std::logic_error("generated scenario is not weakly connected");
  }
  return s;
}

}  // namespace quadstab
