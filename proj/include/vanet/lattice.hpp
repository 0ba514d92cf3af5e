#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace vanet {

/// Vertex pair of one lattice bond; first < second.
using Bond = std::pair<std::size_t, std::size_t>;

/// Bonds of a rows x cols open-boundary grid. Vertex (r, c) has id r * cols + c.
/// Horizontal bonds come first in row-major order, then vertical bonds in
/// row-major order of their upper vertex. Street ids in CityTopology follow
/// the same ordering, so a per-street vector is also a per-bond vector.
inline std::vector<Bond> grid_bonds(std::size_t rows, std::size_t cols) {
  std::vector<Bond> bonds;
  if (rows == 0 || cols == 0) return bonds;
  bonds.reserve(rows * (cols - 1) + (rows - 1) * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c + 1 < cols; ++c) {
      bonds.emplace_back(r * cols + c, r * cols + c + 1);
    }
  }
  for (std::size_t r = 0; r + 1 < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      bonds.emplace_back(r * cols + c, (r + 1) * cols + c);
    }
  }
  return bonds;
}

inline std::vector<Bond> square_lattice_bonds(std::size_t side) { return grid_bonds(side, side); }

/// 2 * side * (side - 1).
constexpr std::size_t square_lattice_bond_count(std::size_t side) {
  return side < 1 ? 0 : 2 * side * (side - 1);
}

}  // namespace vanet
