#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "cei/geometry.hpp"

namespace cei {

/// Sparse uniform grid over a fixed point set. Cells are hashed, so memory is
/// proportional to the number of occupied cells.
class SparseGrid {
 public:
  using Cell = std::array<std::int64_t, 3>;

  SparseGrid(std::span<const Vec3> points, double cell_size);

  double cell_size() const { return cell_size_; }
  Cell cell_of(const Vec3& p) const;
  /// Point indices stored in `cell`, ascending; empty if unoccupied.
  std::span<const std::uint32_t> bucket(const Cell& cell) const;
  const Cell& min_cell() const { return min_cell_; }
  const Cell& max_cell() const { return max_cell_; }

  /// True if any stored point lies at distance < radius from p
  /// (radius <= cell_size).
  bool any_within(const Vec3& p, double radius) const;

 private:
  struct CellHash {
    std::size_t operator()(const Cell& c) const;
  };

  std::span<const Vec3> points_;
  double cell_size_;
  Cell min_cell_{};
  Cell max_cell_{};
  std::unordered_map<Cell, std::vector<std::uint32_t>, CellHash> buckets_;
};

}  // namespace cei
