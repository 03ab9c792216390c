#include <doctest.h>

#include <cmath>
#include <set>

#include "fixtures.hpp"

using namespace quadstab;
using namespace fixtures;

namespace {

// Interval of r on an axis as [lo, lo + 1) / 2^level, recomputed from the path.
std::pair<std::uint64_t, int> interval_from_path(const Region& r, const Convention& conv, int axis) {
  std::uint64_t lo = 0;
  int level = 0;
  for (int k = 0; k < r.depth(); ++k) {
    if (k % r.dim() != axis) continue;
    const bool upper = (r.step(k) == Side::left) != conv.smaller_first[static_cast<std::size_t>(axis)];
    lo = lo * 2 + (upper ? 1 : 0);
    ++level;
  }
  return {lo, level};
}

// Leaves tile the root: no leaf path is a prefix of another and the
// dyadic volumes sum to exactly one.
void check_partition(const DivisionTree& t) {
  std::vector<Region> leaves;
  for (int i : t.leaves()) leaves.push_back(t.nodes()[static_cast<std::size_t>(i)].region);
  int max_depth = 0;
  for (const auto& r : leaves) max_depth = std::max(max_depth, r.depth());
  REQUIRE(max_depth < 127);
  uint128 volume = 0;
  for (const auto& r : leaves) volume += static_cast<uint128>(1) << (max_depth - r.depth());
  CHECK(volume == (static_cast<uint128>(1) << max_depth));
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    for (std::size_t j = 0; j < leaves.size(); ++j) {
      if (i != j) CHECK_FALSE(leaves[i].contains(leaves[j]));
    }
  }
}

int points_in(const Region& r, const std::vector<Coord>& pts) {
  return static_cast<int>(std::count_if(pts.begin(), pts.end(), [&](const Coord& p) { return r.contains(p); }));
}

}  // namespace

TEST_CASE("coordinates snap to odd mantissas") {
  const Coord p = Coord::from_unit(4, {0.5, 0.25});
  CHECK(p.axis(0) == 9);
  CHECK(p.axis(1) == 5);
  CHECK(p.on_grid_interior());
  CHECK_FALSE(Coord(4, {8, 5}).on_grid_interior());
  CHECK_THROWS_AS(Coord::from_unit(4, {1.0, 0.5}), SpaceError);
  CHECK_THROWS_AS(Coord(4, {16, 1}), SpaceError);
  CHECK_THROWS_AS(Coord(4, {1}), SpaceError);
}

TEST_CASE("split of the unit square") {
  const Geometry g(2, kBits);
  const auto [l, r] = g.split(g.root());
  CHECK(l.path() == "L");
  CHECK(l.cut_axis() == 1);
  CHECK(l.level(0) == 1);
  CHECK(l.lo(0) == 0);
  CHECK(l.level(1) == 0);
  CHECK(r.lo(0) == 1);
  CHECK(l.contains(at(0.25, 0.5)));
  CHECK_FALSE(l.contains(at(0.75, 0.5)));

  // Second cut is horizontal and the northern half comes first.
  const auto [ln, ls] = g.split(l);
  CHECK(ln.path() == "LL");
  CHECK(ln.lo(1) == 1);
  CHECK(ln.level(1) == 1);
  CHECK(ls.lo(1) == 0);
  CHECK(ln.contains(at(0.25, 0.75)));
  CHECK(ls.contains(at(0.25, 0.25)));
}

TEST_CASE("d=3 cuts cycle through the axes") {
  const Geometry g(3, kBits);
  Region r = g.root();
  for (int k = 0; k < 7; ++k) {
    CHECK(r.cut_axis() == k % 3);
    r = g.child(r, k % 2 ? Side::right : Side::left);
  }
  CHECK(r.level(0) == 3);
  CHECK(r.level(1) == 2);
  CHECK(r.level(2) == 2);
}

TEST_CASE("cuts beyond the grid fail") {
  const Geometry g(2, 2);
  Region r = g.root();
  for (int k = 0; k < 4; ++k) r = g.child(r, Side::left);
  CHECK_THROWS_WITH_AS(g.child(r, Side::left), "precision exceeded", SpaceError);
}

TEST_CASE("region paths round trip and derive intervals") {
  Rng rng(11);
  for (int d : {2, 3, 5}) {
    const Geometry g(d, 12);
    for (int trial = 0; trial < 200; ++trial) {
      std::string path;
      const int depth = static_cast<int>(rng.below(static_cast<std::uint64_t>(d * 12)));
      for (int k = 0; k < depth; ++k) path.push_back(rng.coin() ? 'L' : 'R');
      const Region r = g.region(path);
      CHECK(r.path() == path);
      for (int i = 0; i < d; ++i) {
        const auto [lo, level] = interval_from_path(r, g.convention(), i);
        CHECK(r.lo(i) == lo);
        CHECK(r.level(i) == level);
      }
    }
  }
  CHECK_THROWS_AS(Geometry(2, 4).region("LX"), SpaceError);
}

TEST_CASE("containment") {
  const Geometry g(2, kBits);
  CHECK(g.root().contains(at(0.99, 0.01)));
  CHECK_FALSE(g.region("L").contains(at(0.75, 0.3)));
  CHECK(g.region("LL").contains(at(0.25, 0.75)));
  CHECK(g.region("L").contains(g.region("LRL")));
  CHECK_FALSE(g.region("R").contains(g.region("LRL")));
}

TEST_CASE("quad division of small sets") {
  const Geometry g(2, kBits);
  SUBCASE("one point: one cut, two leaves") {
    const std::vector<Coord> pts{at(0.3, 0.3)};
    const auto t = g.quad_division(pts);
    CHECK(t.nodes().size() == 3);
    CHECK(t.leaves().size() == 2);
  }
  SUBCASE("two points separated by the first cut") {
    const std::vector<Coord> pts{at(0.25, 0.5), at(0.75, 0.5)};
    const auto t = g.quad_division(pts);
    std::vector<std::string> leaf_paths;
    for (int i : t.leaves()) leaf_paths.push_back(t.nodes()[static_cast<std::size_t>(i)].region.path());
    CHECK(leaf_paths == std::vector<std::string>{"L", "R"});
  }
  SUBCASE("four-node example") {
    const std::vector<Coord> pts{c, a, dp, b};
    const auto t = g.quad_division(pts);
    std::vector<std::string> leaf_paths;
    std::vector<std::optional<Coord>> held;
    for (int i : t.leaves()) {
      const auto& node = t.nodes()[static_cast<std::size_t>(i)];
      leaf_paths.push_back(node.region.path());
      held.push_back(node.point ? std::optional<Coord>(t.points()[static_cast<std::size_t>(*node.point)])
                                : std::nullopt);
    }
    CHECK(leaf_paths == std::vector<std::string>{"LLL", "LLR", "LR", "RL", "RR"});
    CHECK(held == std::vector<std::optional<Coord>>{a, b, std::nullopt, dp, c});
    // a-leaf [0,0.25)x[0.5,1), empty south-west quarter [0,0.5)x[0,0.5)
    const Region al = g.region("LLL");
    CHECK((al.lo(0) == 0 && al.level(0) == 2 && al.lo(1) == 1 && al.level(1) == 1));
    const Region sw = g.region("LR");
    CHECK((sw.lo(0) == 0 && sw.level(0) == 1 && sw.lo(1) == 0 && sw.level(1) == 1));
    CHECK(t.ordered_points() == std::vector<Coord>{a, b, dp, c});
    CHECK(region_locate(t, at(0.9, 0.9)).path() == "RL");
  }
}

TEST_CASE("division trees partition the cube and stay minimal") {
  Rng rng(5);
  for (int d : {2, 3, 4}) {
    const Geometry g(d, kBits);
    for (int trial = 0; trial < 40; ++trial) {
      const auto pts = random_set(rng, d, 1 + rng.below(40));
      const auto t = g.quad_division(pts);
      check_partition(t);
      for (const auto& node : t.nodes()) {
        const int inside = points_in(node.region, pts);
        if (node.is_leaf()) {
          CHECK(inside <= 1);
          CHECK(node.point.has_value() == (inside == 1));
        } else if (node.parent >= 0) {
          CHECK(inside >= 2);
        }
      }
    }
  }
}

TEST_CASE("overlay order examples") {
  const Geometry g(2, kBits);
  CHECK(g.order_compare(at(0.25, 0.5), at(0.75, 0.5)) == Ordering::less);
  CHECK(g.order_compare(at(0.25, 0.75), at(0.25, 0.25)) == Ordering::less);
  CHECK(g.interleave_compare(at(0.25, 0.5), at(0.75, 0.5)) == Ordering::less);
  CHECK(g.interleave_compare(at(0.75, 0.5), at(0.25, 0.5)) == Ordering::greater);
  CHECK(g.interleave_compare(at(0.25, 0.75), at(0.25, 0.25)) == Ordering::less);

  std::vector<Coord> v{c, dp, a, b};
  std::sort(v.begin(), v.end(), [&](const Coord& x, const Coord& y) { return g.precedes(x, y); });
  CHECK(v == std::vector<Coord>{a, b, dp, c});
  std::sort(v.begin(), v.end(),
            [&](const Coord& x, const Coord& y) { return g.interleave_compare(x, y) == Ordering::less; });
  CHECK(v == std::vector<Coord>{a, b, dp, c});

  CHECK_THROWS_WITH_AS(g.order_compare(a, a), doctest::Contains("duplicate coordinate"), SpaceError);
  CHECK_THROWS_AS(g.interleave_compare(a, a), SpaceError);
}

TEST_CASE("overlay order matches the interleaving oracle and the DFS of the global tree") {
  Rng rng(99);
  for (int d : {2, 3, 4, 6}) {
    const Geometry g(d, kBits);
    for (int trial = 0; trial < 3000; ++trial) {
      const Coord u = random_coord(rng, d), v = random_coord(rng, d);
      if (u == v) continue;
      const auto uv = g.order_compare(u, v);
      CHECK(uv == g.interleave_compare(u, v));
      CHECK(g.order_compare(v, u) != uv);
    }
    for (int trial = 0; trial < 20; ++trial) {
      auto pts = random_set(rng, d, 2 + rng.below(30));
      const auto dfs = g.quad_division(pts).ordered_points();
      std::sort(pts.begin(), pts.end(), [&](const Coord& x, const Coord& y) { return g.precedes(x, y); });
      CHECK(dfs == pts);
    }
  }
}

TEST_CASE("the convention decides the order") {
  Convention flipped = Convention::standard(2);
  flipped.smaller_first[1] = true;
  const Geometry std2(2, kBits), south_first(2, kBits, flipped);
  CHECK(std2.precedes(at(0.25, 0.75), at(0.25, 0.25)));
  CHECK(south_first.precedes(at(0.25, 0.25), at(0.25, 0.75)));
  CHECK(Convention::standard(3).smaller_first[1]);
}

TEST_CASE("local regions of the four-node example") {
  const Geometry g(2, kBits);
  SUBCASE("alone: the other half") {
    const auto lr = g.compute_regions(a, std::nullopt, std::nullopt);
    CHECK(lr.area.path() == "L");
    CHECK(paths(lr.quads) == std::vector<std::string>{"R"});
  }
  SUBCASE("a with right neighbour b") {
    const auto lr = g.compute_regions(a, std::nullopt, b);
    CHECK(lr.area.path() == "LLL");
    CHECK(paths(lr.quads) == std::vector<std::string>{"R", "LR", "LLR"});
  }
  SUBCASE("inconsistent neighbours are rejected") {
    CHECK_THROWS_AS(g.compute_regions(b, dp, std::nullopt), SpaceError);
    CHECK_THROWS_AS(g.compute_regions(b, std::nullopt, a), SpaceError);
  }
}

TEST_CASE("local regions tile the cube and agree with the tree oracle") {
  Rng rng(7);
  for (int d : {2, 3, 4}) {
    const Geometry g(d, kBits);
    for (int trial = 0; trial < 200; ++trial) {
      auto pts = random_set(rng, d, 3);
      std::sort(pts.begin(), pts.end(), [&](const Coord& x, const Coord& y) { return g.precedes(x, y); });
      const Coord& v = pts[1];
      const std::optional<Coord> l = rng.coin() ? std::optional<Coord>(pts[0]) : std::nullopt;
      const std::optional<Coord> r = rng.coin() ? std::optional<Coord>(pts[2]) : std::nullopt;
      const auto lr = g.compute_regions(v, l, r);

      std::vector<Coord> members{v};
      if (l) members.push_back(*l);
      if (r) members.push_back(*r);
      const auto oracle = regions_in_tree(g.quad_division(members), v);
      CHECK(lr.area == oracle.area);
      CHECK(paths(lr.quads) == paths(oracle.quads));

      CHECK(lr.area.contains(v));
      uint128 volume = static_cast<uint128>(1) << (120 - lr.area.depth());
      for (const auto& q : lr.quads) {
        CHECK_FALSE(q.contains(v));
        const Region parent = g.region(q.path().substr(0, q.path().size() - 1));
        CHECK(parent.contains(v));
        volume += static_cast<uint128>(1) << (120 - q.depth());
      }
      CHECK(volume == (static_cast<uint128>(1) << 120));
    }
  }
}

TEST_CASE("closer neighbours only refine the local regions") {
  Rng rng(8);
  for (int d : {2, 3}) {
    const Geometry g(d, kBits);
    for (int trial = 0; trial < 200; ++trial) {
      auto pts = random_set(rng, d, 9);
      std::sort(pts.begin(), pts.end(), [&](const Coord& x, const Coord& y) { return g.precedes(x, y); });
      const std::size_t v = 4;
      const std::size_t l = rng.below(4), l2 = l + rng.below(4 - l);
      const std::size_t r = 5 + rng.below(4), r2 = 5 + rng.below(r - 4);
      const auto far = g.compute_regions(pts[v], pts[l], pts[r]).quads;
      const auto near = g.compute_regions(pts[v], pts[l2], pts[r2]).quads;
      CHECK(std::includes(near.begin(), near.end(), far.begin(), far.end()));
      const auto alone = g.compute_regions(pts[v], std::nullopt, std::nullopt).quads;
      CHECK(std::includes(far.begin(), far.end(), alone.begin(), alone.end()));
    }
  }
}

TEST_CASE("region diameters") {
  const Geometry g(2, kBits);
  CHECK(region_diameter(g.root()) == doctest::Approx(std::sqrt(2.0)));
  CHECK(region_diameter(g.region("LR")) == doctest::Approx(0.7071).epsilon(1e-4));
  // 4 log2 n cuts with n = 4: sqrt(2) / n^2.
  CHECK(region_diameter(g.region("LRLRLRLR")) == doctest::Approx(std::sqrt(2.0) / 16));
  // Exact form in grid units: quarter square has squared diagonal 2 * 2^{2(B-1)}.
  CHECK(region_diameter_squared(g.region("LR"), kBits) == (static_cast<uint128>(2) << (2 * (kBits - 1))));
  CHECK(distance_squared(Coord(4, {1, 1}), Coord(4, {4, 5})) == 25);
}
