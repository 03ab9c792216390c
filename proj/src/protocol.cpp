#include "quadstab/protocol.hpp"

#include <algorithm>

namespace quadstab {

const char* kind_name(MessageKind k) {
  switch (k) {
    case MessageKind::linearize: return "LINEARIZE";
    case MessageKind::qlinearize: return "QLINEARIZE";
    case MessageKind::search: return "SEARCH";
    case MessageKind::search_result: return "SEARCHRESULT";
  }
  return "?";
}

LocalRegions local_regions(const Geometry& g, const NodeState& s) {
  return g.compute_regions(s.self, s.left, s.right);
}

namespace {

int region_index(const LocalRegions& lr, const Coord& c) {
  for (std::size_t i = 0; i < lr.quads.size(); ++i) {
    if (lr.quads[i].contains(c)) return static_cast<int>(i);
  }
  return -1;
}

// Accumulates one action's state changes and outbound messages.
class Transition {
 public:
  Transition(const Geometry& g, NodeState s) : g_(g) { fx_.state = std::move(s); }

  NodeState& s() { return fx_.state; }

  bool before(const Coord& a, const Coord& b) const { return a != b && g_.precedes(a, b); }

  void send(const Coord& to, Message m) { fx_.outbound.push_back({to, std::move(m)}); }

  void fix_list() {
    auto& st = s();
    std::vector<Coord> removed;
    if (st.left && !before(*st.left, st.self)) {
      if (*st.left != st.self) removed.push_back(*st.left);
      st.left.reset();
    }
    if (st.right && !before(st.self, *st.right)) {
      if (*st.right != st.self) removed.push_back(*st.right);
      st.right.reset();
    }
    for (const auto& w : removed) linearize(w);
  }

  void linearize(const Coord& w) {
    auto& st = s();
    fix_list();
    if (w == st.self) return;
    if ((st.left && *st.left == w) || (st.right && *st.right == w)) return;

    if (before(w, st.self)) {
      if (st.left && before(w, *st.left)) {
        send(*st.left, Linearize{w});
      } else {
        if (st.left) send(w, Linearize{*st.left});
        st.left = w;
      }
    } else {
      if (st.right && before(*st.right, w)) {
        send(*st.right, Linearize{w});
      } else {
        if (st.right) send(w, Linearize{*st.right});
        st.right = w;
      }
    }
  }

  LocalRegions regions() const { return local_regions(g_, fx_.state); }

  // Keeps the overlay-smallest member per Q(v) region; everything else goes
  // back to the list protocol. Self is dropped silently.
  void fix_quad() {
    auto& st = s();
    std::sort(st.q.begin(), st.q.end(),
              [this](const Coord& a, const Coord& b) { return before(a, b); });
    const LocalRegions lr = regions();
    std::vector<bool> covered(lr.quads.size(), false);
    std::vector<Coord> kept, evicted;
    for (const auto& m : st.q) {
      if (m == st.self) continue;
      const int idx = lr.area.contains(m) ? -1 : region_index(lr, m);
      if (idx < 0 || covered[static_cast<std::size_t>(idx)]) {
        evicted.push_back(m);
      } else {
        covered[static_cast<std::size_t>(idx)] = true;
        kept.push_back(m);
      }
    }
    st.q = std::move(kept);
    for (const auto& m : evicted) linearize(m);
  }

  bool covered(const Region& r) const {
    return std::any_of(fx_.state.q.begin(), fx_.state.q.end(),
                       [&](const Coord& m) { return r.contains(m); });
  }

  void add_quad(const Coord& w) {
    auto& q = s().q;
    auto at = std::lower_bound(q.begin(), q.end(), w,
                               [this](const Coord& a, const Coord& b) { return before(a, b); });
    q.insert(at, w);
  }

  void terminate(const Search& m) {
    const auto& self = fx_.state.self;
    fx_.terminal = SearchTermination{m.request_id, m.initiator, m.target, self, m.hops, m.trail};
    send(m.initiator, SearchResult{m.request_id, self});
  }

  Effects finish() && { return std::move(fx_); }

 private:
  const Geometry& g_;
  Effects fx_;
};

}  // namespace

Effects sanitize_list(const Geometry& g, NodeState s) {
  Transition t(g, std::move(s));
  t.fix_list();
  return std::move(t).finish();
}

Effects sanitize_quad(const Geometry& g, NodeState s) {
  Transition t(g, std::move(s));
  t.fix_quad();
  return std::move(t).finish();
}

Effects handle_list_timeout(const Geometry& g, NodeState s) {
  Transition t(g, std::move(s));
  t.fix_list();
  const auto& st = t.s();
  if (st.left) t.send(*st.left, Linearize{st.self});
  if (st.right) t.send(*st.right, Linearize{st.self});
  return std::move(t).finish();
}

Effects handle_linearize(const Geometry& g, NodeState s, const Coord& w) {
  Transition t(g, std::move(s));
  t.linearize(w);
  return std::move(t).finish();
}

namespace {

void quad_timeout(Transition& t) {
  t.fix_list();
  t.fix_quad();
  auto& st = t.s();
  if (!st.q.empty()) {
    const Coord w = st.q[st.rr_q % st.q.size()];
    ++st.rr_q;
    t.linearize(w);
  }

  const LocalRegions lr = t.regions();
  std::vector<const Region*> open;
  for (const auto& r : lr.quads) {
    if (!t.covered(r)) open.push_back(&r);
  }
  std::optional<Region> ask;
  if (!open.empty()) ask = *open[st.rr_area % open.size()];
  ++st.rr_area;

  if (st.left) t.send(*st.left, QLinearize{st.self, ask});
  if (st.right) t.send(*st.right, QLinearize{st.self, ask});
}

}  // namespace

Effects handle_quad_timeout(const Geometry& g, NodeState s) {
  Transition t(g, std::move(s));
  quad_timeout(t);
  return std::move(t).finish();
}

Effects handle_timeout(const Geometry& g, NodeState s) {
  Transition t(g, std::move(s));
  t.fix_list();
  const auto& st = t.s();
  if (st.left) t.send(*st.left, Linearize{st.self});
  if (st.right) t.send(*st.right, Linearize{st.self});
  quad_timeout(t);
  return std::move(t).finish();
}

Effects handle_qlinearize(const Geometry& g, NodeState s, const Coord& w,
                          const std::optional<Region>& area) {
  Transition t(g, std::move(s));
  t.fix_list();
  t.fix_quad();
  t.linearize(w);

  auto& st = t.s();
  if (w != st.self) {
    const LocalRegions lr = t.regions();
    if (!lr.area.contains(w)) {
      for (const auto& r : lr.quads) {
        if (r.contains(w)) {
          if (!t.covered(r)) t.add_quad(w);
          break;
        }
      }
    }
  }

  if (area) {
    // Q is in overlay order, so the first hit among Q and self is the smallest.
    std::optional<Coord> answer;
    for (const auto& m : st.q) {
      if (area->contains(m)) {
        answer = m;
        break;
      }
    }
    if (area->contains(st.self) && (!answer || t.before(st.self, *answer))) answer = st.self;
    if (answer) t.send(w, QLinearize{*answer, std::nullopt});
  }
  return std::move(t).finish();
}

Effects handle_search(const Geometry& g, NodeState s, Search m) {
  Transition t(g, std::move(s));
  t.fix_list();
  t.fix_quad();
  const LocalRegions lr = t.regions();
  if (lr.area.contains(m.target)) {
    t.terminate(m);
    return std::move(t).finish();
  }
  const auto& st = t.s();
  for (const auto& r : lr.quads) {
    if (!r.contains(m.target)) continue;
    for (const auto& w : st.q) {
      if (r.contains(w)) {
        ++m.hops;
        m.trail.push_back(w);
        t.send(w, std::move(m));
        return std::move(t).finish();
      }
    }
    break;
  }
  t.terminate(m);
  return std::move(t).finish();
}

Effects handle_message(const Geometry& g, NodeState s, const Message& m) {
  return std::visit(
      [&](const auto& msg) -> Effects {
        using T = std::decay_t<decltype(msg)>;
        if constexpr (std::is_same_v<T, Linearize>) {
          return handle_linearize(g, std::move(s), msg.w);
        } else if constexpr (std::is_same_v<T, QLinearize>) {
          return handle_qlinearize(g, std::move(s), msg.w, msg.area);
        } else if constexpr (std::is_same_v<T, Search>) {
          return handle_search(g, std::move(s), msg);
        } else {
          return Effects{std::move(s), {}, std::nullopt};
        }
      },
      m);
}

}  // namespace quadstab
