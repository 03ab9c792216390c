#include "quadstab/space.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace quadstab {

namespace {

void check_shape(int dim, int bits) {
  if (dim < 2 || dim > kMaxDim) {
    throw SpaceError("dimension must be in [2, " + std::to_string(kMaxDim) + "], got " +
                     std::to_string(dim));
  }
  if (bits < 1 || bits > kMaxBits) {
    throw SpaceError("bits must be in [1, " + std::to_string(kMaxBits) + "], got " +
                     std::to_string(bits));
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Coord

Coord::Coord(int bits, std::span<const std::uint64_t> axes)
    : dim_(static_cast<int>(axes.size())), bits_(bits) {
  check_shape(dim_, bits_);
  const std::uint64_t limit = std::uint64_t{1} << bits_;
  for (std::size_t i = 0; i < axes.size(); ++i) {
    if (axes[i] >= limit) {
      throw SpaceError("axis " + std::to_string(i) + " mantissa " + std::to_string(axes[i]) +
                       " out of range for " + std::to_string(bits_) + " bits");
    }
    axes_[i] = axes[i];
  }
}

Coord Coord::from_unit(int bits, std::span<const double> values) {
  check_shape(static_cast<int>(values.size()), bits);
  std::array<std::uint64_t, kMaxDim> m{};
  const double scale = std::ldexp(1.0, bits);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double x = values[i];
    if (!(x >= 0.0 && x < 1.0)) {
      throw SpaceError("unit coordinate out of [0,1): " + std::to_string(x));
    }
    m[i] = static_cast<std::uint64_t>(std::floor(x * scale)) | 1u;
  }
  return Coord(bits, std::span<const std::uint64_t>(m.data(), values.size()));
}

double Coord::unit(int i) const {
  return std::ldexp(static_cast<double>(axis(i)), -bits_);
}

bool Coord::on_grid_interior() const {
  for (int i = 0; i < dim_; ++i) {
    if ((axis(i) & 1u) == 0) return false;
  }
  return dim_ > 0;
}

std::string Coord::to_string() const {
  std::ostringstream os;
  os.precision(6);
  os << '(';
  for (int i = 0; i < dim_; ++i) {
    if (i) os << ", ";
    os << unit(i);
  }
  os << ')';
  return os.str();
}

// ---------------------------------------------------------------------------
// Convention

Convention Convention::standard(int dim) {
  Convention c;
  for (int i = 0; i < kMaxDim; ++i) c.smaller_first[static_cast<std::size_t>(i)] = true;
  if (dim == 2) c.smaller_first[1] = false;
  return c;
}

// ---------------------------------------------------------------------------
// Region

Side Region::step(int k) const {
  const auto word = path_bits_[static_cast<std::size_t>(k / 64)];
  return ((word >> (k % 64)) & 1u) ? Side::right : Side::left;
}

bool Region::contains(const Coord& c) const {
  for (int i = 0; i < dim_; ++i) {
    const int shift = c.bits() - level(i);
    if ((c.axis(i) >> shift) != lo(i)) return false;
  }
  return true;
}

bool Region::contains(const Region& other) const {
  if (other.depth_ < depth_ || other.dim_ != dim_) return false;
  for (int k = 0; k < depth_; ++k) {
    if (step(k) != other.step(k)) return false;
  }
  return true;
}

std::string Region::path() const {
  std::string s;
  s.reserve(static_cast<std::size_t>(depth_));
  for (int k = 0; k < depth_; ++k) s.push_back(step(k) == Side::left ? 'L' : 'R');
  return s;
}

bool operator<(const Region& a, const Region& b) {
  if (a.depth_ != b.depth_) return a.depth_ < b.depth_;
  for (int k = 0; k < a.depth_; ++k) {
    const auto sa = a.step(k), sb = b.step(k);
    if (sa != sb) return sa == Side::left;
  }
  return false;
}

bool operator==(const Region& a, const Region& b) {
  return a.dim_ == b.dim_ && a.depth_ == b.depth_ && a.path_bits_ == b.path_bits_ &&
         a.lo_ == b.lo_;
}

// ---------------------------------------------------------------------------
// DivisionTree

std::vector<int> DivisionTree::leaves() const {
  std::vector<int> out;
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const int i = stack.back();
    stack.pop_back();
    const auto& node = nodes_[static_cast<std::size_t>(i)];
    if (node.is_leaf()) {
      out.push_back(i);
    } else {
      stack.push_back(node.children[1]);
      stack.push_back(node.children[0]);
    }
  }
  return out;
}

std::vector<Coord> DivisionTree::ordered_points() const {
  std::vector<Coord> out;
  for (int leaf : leaves()) {
    const auto& node = nodes_[static_cast<std::size_t>(leaf)];
    if (node.point) out.push_back(points_[static_cast<std::size_t>(*node.point)]);
  }
  return out;
}

int DivisionTree::locate(const Coord& p) const {
  int i = 0;
  while (!nodes_[static_cast<std::size_t>(i)].is_leaf()) {
    const auto& node = nodes_[static_cast<std::size_t>(i)];
    const int l = node.children[0];
    i = nodes_[static_cast<std::size_t>(l)].region.contains(p) ? l : node.children[1];
  }
  return i;
}

Region region_locate(const DivisionTree& tree, const Coord& p) {
  return tree.nodes()[static_cast<std::size_t>(tree.locate(p))].region;
}

LocalRegions regions_in_tree(const DivisionTree& tree, const Coord& v) {
  const auto& nodes = tree.nodes();
  const int leaf = tree.locate(v);
  LocalRegions out{nodes[static_cast<std::size_t>(leaf)].region, {}};
  for (int i = leaf; nodes[static_cast<std::size_t>(i)].parent >= 0;) {
    const auto& parent = nodes[static_cast<std::size_t>(nodes[static_cast<std::size_t>(i)].parent)];
    const int sibling = parent.children[0] == i ? parent.children[1] : parent.children[0];
    out.quads.push_back(nodes[static_cast<std::size_t>(sibling)].region);
    i = nodes[static_cast<std::size_t>(i)].parent;
  }
  std::sort(out.quads.begin(), out.quads.end());
  return out;
}

double region_diameter(const Region& r) {
  double sum = 0.0;
  for (int i = 0; i < r.dim(); ++i) {
    const double w = std::ldexp(1.0, -r.level(i));
    sum += w * w;
  }
  return std::sqrt(sum);
}

uint128 region_diameter_squared(const Region& r, int bits) {
  uint128 sum = 0;
  for (int i = 0; i < r.dim(); ++i) {
    const int e = 2 * (bits - r.level(i));
    sum += static_cast<uint128>(1) << e;
  }
  return sum;
}

uint128 distance_squared(const Coord& a, const Coord& b) {
  uint128 sum = 0;
  for (int i = 0; i < a.dim(); ++i) {
    const std::uint64_t x = a.axis(i), y = b.axis(i);
    const std::uint64_t d = x > y ? x - y : y - x;
    sum += static_cast<uint128>(d) * d;
  }
  return sum;
}

// ---------------------------------------------------------------------------
// Geometry

Geometry::Geometry(int dim, int bits) : Geometry(dim, bits, Convention::standard(dim)) {}

Geometry::Geometry(int dim, int bits, Convention convention)
    : dim_(dim), bits_(bits), convention_(convention) {
  check_shape(dim, bits);
}

void Geometry::check(const Coord& c) const {
  if (c.dim() != dim_ || c.bits() != bits_) {
    throw SpaceError("coordinate " + c.to_string() + " does not match geometry d=" +
                     std::to_string(dim_) + " bits=" + std::to_string(bits_));
  }
}

Region Geometry::root() const {
  Region r;
  r.dim_ = dim_;
  return r;
}

Region Geometry::child(const Region& r, Side side) const {
  if (r.depth_ >= dim_ * bits_) throw SpaceError("precision exceeded");
  const int axis = r.cut_axis();
  const auto a = static_cast<std::size_t>(axis);
  // Taking the upper half on this axis?
  const bool upper = (side == Side::left) != convention_.smaller_first[a];

  Region c = r;
  c.level_[a] = static_cast<std::uint16_t>(r.level_[a] + 1);
  c.lo_[a] = (r.lo_[a] << 1) | (upper ? 1u : 0u);
  if (side == Side::right) {
    c.path_bits_[static_cast<std::size_t>(r.depth_ / 64)] |= std::uint64_t{1} << (r.depth_ % 64);
  }
  c.depth_ = r.depth_ + 1;
  return c;
}

std::pair<Region, Region> Geometry::split(const Region& r) const {
  return {child(r, Side::left), child(r, Side::right)};
}

Region Geometry::region(std::string_view path) const {
  Region r = root();
  for (char ch : path) {
    if (ch == 'L') {
      r = child(r, Side::left);
    } else if (ch == 'R') {
      r = child(r, Side::right);
    } else {
      throw SpaceError("bad region path character '" + std::string(1, ch) + "'");
    }
  }
  return r;
}

DivisionTree Geometry::quad_division(std::span<const Coord> points, const Region& r) const {
  DivisionTree tree;
  tree.points_.assign(points.begin(), points.end());
  for (const auto& p : points) {
    check(p);
    if (!r.contains(p)) throw SpaceError("point " + p.to_string() + " outside division root");
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      if (points[i] == points[j]) throw SpaceError("duplicate coordinate " + points[i].to_string());
    }
  }

  struct Work {
    int node;
    std::vector<int> members;
  };
  tree.nodes_.push_back(DivisionNode{r, -1, {-1, -1}, std::nullopt});
  std::vector<int> all(points.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);

  // The root is always cut once, then every half with >= 2 points recurses.
  std::vector<Work> stack{{0, std::move(all)}};
  while (!stack.empty()) {
    Work w = std::move(stack.back());
    stack.pop_back();
    auto [lhs, rhs] = split(tree.nodes_[static_cast<std::size_t>(w.node)].region);
    std::array<Region, 2> halves{lhs, rhs};
    for (int side = 0; side < 2; ++side) {
      std::vector<int> inside;
      for (int m : w.members) {
        if (halves[static_cast<std::size_t>(side)].contains(points[static_cast<std::size_t>(m)])) {
          inside.push_back(m);
        }
      }
      const int id = static_cast<int>(tree.nodes_.size());
      tree.nodes_.push_back(DivisionNode{halves[static_cast<std::size_t>(side)], w.node, {-1, -1},
                                         std::nullopt});
      tree.nodes_[static_cast<std::size_t>(w.node)].children[static_cast<std::size_t>(side)] = id;
      if (inside.size() <= 1) {
        if (!inside.empty()) tree.nodes_[static_cast<std::size_t>(id)].point = inside.front();
      } else {
        stack.push_back({id, std::move(inside)});
      }
    }
  }
  return tree;
}

Ordering Geometry::order_compare(const Coord& u, const Coord& v) const {
  if (u == v) throw SpaceError("duplicate coordinate " + u.to_string());
  Region r = root();
  for (;;) {
    auto [lhs, rhs] = split(r);
    const bool u_left = lhs.contains(u);
    const bool v_left = lhs.contains(v);
    if (u_left != v_left) return u_left ? Ordering::less : Ordering::greater;
    r = u_left ? std::move(lhs) : std::move(rhs);
  }
}

Ordering Geometry::interleave_compare(const Coord& u, const Coord& v) const {
  if (u == v) throw SpaceError("duplicate coordinate " + u.to_string());
  for (int round = bits_ - 1; round >= 0; --round) {
    for (int axis = 0; axis < dim_; ++axis) {
      unsigned bu = (u.axis(axis) >> round) & 1u;
      unsigned bv = (v.axis(axis) >> round) & 1u;
      if (!convention_.smaller_first[static_cast<std::size_t>(axis)]) {
        bu ^= 1u;
        bv ^= 1u;
      }
      if (bu != bv) return bu < bv ? Ordering::less : Ordering::greater;
    }
  }
  return Ordering::less;  // unreachable for distinct coordinates
}

LocalRegions Geometry::compute_regions(const Coord& v, const std::optional<Coord>& left,
                                       const std::optional<Coord>& right) const {
  if (left && !precedes(*left, v)) throw SpaceError("left neighbor does not precede node");
  if (right && !precedes(v, *right)) throw SpaceError("right neighbor does not follow node");

  // Follow v's branch of the division over {v, left, right}. A neighbor
  // stays "with" v until a cut separates them; the branch ends at the
  // first half that holds v alone.
  bool with_left = left.has_value();
  bool with_right = right.has_value();
  LocalRegions out;
  Region r = root();
  for (;;) {
    auto [lhs, rhs] = split(r);
    const bool v_left = lhs.contains(v);
    Region& mine = v_left ? lhs : rhs;
    out.quads.push_back(v_left ? rhs : lhs);
    if (with_left && !mine.contains(*left)) with_left = false;
    if (with_right && !mine.contains(*right)) with_right = false;
    if (!with_left && !with_right) {
      out.area = std::move(mine);
      return out;
    }
    r = std::move(mine);
  }
}

}  // namespace quadstab
