#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "quadstab/rng.hpp"
#include "quadstab/space.hpp"

namespace fixtures {

using namespace quadstab;

inline constexpr int kBits = 30;

inline Coord at(double x, double y) { return Coord::from_unit(kBits, {x, y}); }

// The four-node example: a ≺ b ≺ d' ≺ c, south-west quarter empty.
inline const Coord a = at(0.1, 0.9);
inline const Coord b = at(0.4, 0.6);
inline const Coord c = at(0.6, 0.2);
inline const Coord dp = at(0.9, 0.8);

inline std::vector<std::string> paths(const std::vector<Region>& rs) {
  std::vector<std::string> out;
  for (const auto& r : rs) out.push_back(r.path());
  return out;
}

inline Coord random_coord(Rng& rng, int dim, int bits = kBits) {
  std::array<std::uint64_t, kMaxDim> v{};
  for (int i = 0; i < dim; ++i) v[static_cast<std::size_t>(i)] = (rng.below(std::uint64_t{1} << (bits - 1)) << 1) | 1u;
  return Coord(bits, std::span<const std::uint64_t>(v.data(), static_cast<std::size_t>(dim)));
}

inline std::vector<Coord> random_set(Rng& rng, int dim, std::size_t n, int bits = kBits) {
  std::vector<Coord> out;
  while (out.size() < n) {
    Coord c = random_coord(rng, dim, bits);
    if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
  }
  return out;
}

}  // namespace fixtures
