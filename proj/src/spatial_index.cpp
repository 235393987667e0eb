#include "cei/spatial_index.hpp"

#include <algorithm>
#include <cmath>

#include "cei/errors.hpp"

namespace cei {

SparseGrid::SparseGrid(std::span<const Vec3> points, double cell_size) : points_(points), cell_size_(cell_size) {
  if (!(cell_size > 0.0) || !std::isfinite(cell_size)) throw ValidationError("grid cell size must be positive");
  min_cell_ = {INT64_MAX, INT64_MAX, INT64_MAX};
  max_cell_ = {INT64_MIN, INT64_MIN, INT64_MIN};
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Cell c = cell_of(points[i]);
    for (int a = 0; a < 3; ++a) {
      min_cell_[a] = std::min(min_cell_[a], c[a]);
      max_cell_[a] = std::max(max_cell_[a], c[a]);
    }
    buckets_[c].push_back(static_cast<std::uint32_t>(i));
  }
}

SparseGrid::Cell SparseGrid::cell_of(const Vec3& p) const {
  return {static_cast<std::int64_t>(std::floor(p.x() / cell_size_)),
          static_cast<std::int64_t>(std::floor(p.y() / cell_size_)),
          static_cast<std::int64_t>(std::floor(p.z() / cell_size_))};
}

std::size_t SparseGrid::CellHash::operator()(const Cell& c) const {
  std::uint64_t h = static_cast<std::uint64_t>(c[0]) * 0x9E3779B97F4A7C15ULL;
  h ^= static_cast<std::uint64_t>(c[1]) * 0xC2B2AE3D27D4EB4FULL + (h << 6) + (h >> 2);
  h ^= static_cast<std::uint64_t>(c[2]) * 0x165667B19E3779F9ULL + (h << 6) + (h >> 2);
  return static_cast<std::size_t>(h);
}

std::span<const std::uint32_t> SparseGrid::bucket(const Cell& cell) const {
  auto it = buckets_.find(cell);
  if (it == buckets_.end()) return {};
  return it->second;
}

bool SparseGrid::any_within(const Vec3& p, double radius) const {
  const Cell c = cell_of(p);
  for (std::int64_t dx = -1; dx <= 1; ++dx) {
    for (std::int64_t dy = -1; dy <= 1; ++dy) {
      for (std::int64_t dz = -1; dz <= 1; ++dz) {
        for (auto i : bucket({c[0] + dx, c[1] + dy, c[2] + dz})) {
          if ((points_[i] - p).norm() < radius) return true;
        }
      }
    }
  }
  return false;
}

}  // namespace cei
