#pragma once

// Exact geometry of recursive cuts over the unit d-cube.
//
// Positions are fixed-point: an axis value a with b bits of precision
// denotes a / 2^b. Node coordinates carry odd mantissas, so they never
// coincide with a cut plane at any reachable depth.

#include <array>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace quadstab {

inline constexpr int kMaxDim = 8;
inline constexpr int kMaxBits = 62;

/// Exact squared distances in grid units need more than 64 bits.
__extension__ using uint128 = unsigned __int128;

class SpaceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Ordering { less, greater };

/// Fixed-point position in [0,1)^d. Node identity when all axes are odd.
class Coord {
 public:
  Coord() = default;
  Coord(int bits, std::span<const std::uint64_t> axes);
  Coord(int bits, std::initializer_list<std::uint64_t> axes)
      : Coord(bits, std::span<const std::uint64_t>(axes.begin(), axes.size())) {}

  /// Snaps unit-cube reals onto the grid: floor(x * 2^bits) with the low
  /// bit forced to one.
  static Coord from_unit(int bits, std::span<const double> values);
  static Coord from_unit(int bits, std::initializer_list<double> values) {
    return from_unit(bits, std::span<const double>(values.begin(), values.size()));
  }

  int dim() const { return dim_; }
  int bits() const { return bits_; }
  std::uint64_t axis(int i) const { return axes_[static_cast<std::size_t>(i)]; }
  double unit(int i) const;

  /// True when every axis mantissa is odd.
  bool on_grid_interior() const;

  /// Human-readable decimal form, e.g. "(0.25, 0.75)".
  std::string to_string() const;

  friend bool operator==(const Coord&, const Coord&) = default;
  /// Lexicographic on (dim, bits, axes); storage order only, not the overlay order.
  friend auto operator<=>(const Coord&, const Coord&) = default;

 private:
  int dim_ = 0;
  int bits_ = 0;
  std::array<std::uint64_t, kMaxDim> axes_{};
};

/// Which half of a cut is the LEFT child, per axis.
struct Convention {
  std::array<bool, kMaxDim> smaller_first{};

  /// d = 2: west first on x, north first on y. d > 2: smaller first everywhere.
  static Convention standard(int dim);

  friend bool operator==(const Convention&, const Convention&) = default;
};

enum class Side : std::uint8_t { left, right };

/// Subarea identified by its cut path from the root. Intervals are derived:
/// on axis i the region is [lo_i, lo_i + 1) / 2^{level_i}.
class Region {
 public:
  Region() = default;

  int dim() const { return dim_; }
  int depth() const { return depth_; }
  Side step(int k) const;
  int cut_axis() const { return depth_ % dim_; }

  std::uint64_t lo(int axis) const { return lo_[static_cast<std::size_t>(axis)]; }
  int level(int axis) const { return level_[static_cast<std::size_t>(axis)]; }

  bool contains(const Coord& c) const;
  bool contains(const Region& other) const;

  /// "L"/"R" path, empty for the whole cube.
  std::string path() const;

  /// Canonical region order: ascending depth, then path with L < R.
  friend bool operator<(const Region& a, const Region& b);
  friend bool operator==(const Region& a, const Region& b);

 private:
  friend class Geometry;

  int dim_ = 0;
  int depth_ = 0;
  std::array<std::uint64_t, 8> path_bits_{};  // bit k set = RIGHT at depth k
  std::array<std::uint64_t, kMaxDim> lo_{};
  std::array<std::uint16_t, kMaxDim> level_{};
};

/// One leaf or inner node of a division tree.
struct DivisionNode {
  Region region;
  int parent = -1;
  std::array<int, 2> children{-1, -1};  // [LEFT, RIGHT]
  std::optional<int> point;             // index into DivisionTree::points()

  bool is_leaf() const { return children[0] < 0; }
};

/// Output of quad_division: the full binary tree, root at index 0.
class DivisionTree {
 public:
  const std::vector<DivisionNode>& nodes() const { return nodes_; }
  const std::vector<Coord>& points() const { return points_; }
  const DivisionNode& root() const { return nodes_.front(); }

  /// Leaf indices in DFS order, left child first.
  std::vector<int> leaves() const;
  /// Input points in DFS leaf order (the total order over the input set).
  std::vector<Coord> ordered_points() const;

  /// Index of the leaf whose region contains p.
  int locate(const Coord& p) const;

 private:
  friend class Geometry;

  std::vector<DivisionNode> nodes_;
  std::vector<Coord> points_;
};

/// A(v) and Q(v) as seen from a node.
struct LocalRegions {
  Region area;                 // A(v)
  std::vector<Region> quads;   // Q(v), canonical order
};

/// Dimension, precision and child convention shared by every node of a run.
class Geometry {
 public:
  Geometry(int dim, int bits);
  Geometry(int dim, int bits, Convention convention);

  int dim() const { return dim_; }
  int bits() const { return bits_; }
  const Convention& convention() const { return convention_; }

  Region root() const;
  /// Rebuilds a region from its "L"/"R" path. Throws SpaceError on bad input.
  Region region(std::string_view path) const;

  /// Cut on axis depth mod d at the interval midpoint.
  std::pair<Region, Region> split(const Region& r) const;
  Region child(const Region& r, Side side) const;

  DivisionTree quad_division(std::span<const Coord> points, const Region& r) const;
  DivisionTree quad_division(std::span<const Coord> points) const {
    return quad_division(points, root());
  }

  /// DFS order of the two-point division tree.
  Ordering order_compare(const Coord& u, const Coord& v) const;
  bool precedes(const Coord& u, const Coord& v) const {
    return order_compare(u, v) == Ordering::less;
  }

  /// Independent route: compare convention-adjusted bit-interleaved words.
  Ordering interleave_compare(const Coord& u, const Coord& v) const;

  /// A(v), Q(v) of the division over the present members of {v, left, right}.
  LocalRegions compute_regions(const Coord& v, const std::optional<Coord>& left,
                               const std::optional<Coord>& right) const;

  /// Throws SpaceError unless c matches this geometry's dim and bits.
  void check(const Coord& c) const;

  friend bool operator==(const Geometry&, const Geometry&) = default;

 private:
  int dim_;
  int bits_;
  Convention convention_;
};

/// Leaf region of tree containing p.
Region region_locate(const DivisionTree& tree, const Coord& p);

/// A(v), Q(v) read off an existing tree containing v as a point.
LocalRegions regions_in_tree(const DivisionTree& tree, const Coord& v);

/// Euclidean length of the region's main diagonal.
double region_diameter(const Region& r);

/// Squared diagonal in units of 2^{-2 bits}, exact.
uint128 region_diameter_squared(const Region& r, int bits);

/// Squared Euclidean distance in units of 2^{-2 bits}, exact.
uint128 distance_squared(const Coord& a, const Coord& b);

}  // namespace quadstab
