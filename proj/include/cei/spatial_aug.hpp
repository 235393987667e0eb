#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "cei/funcrep.hpp"
#include "cei/geometry.hpp"
#include "cei/obs_synth.hpp"

namespace cei {

/// Rigid transform applied to a representation or object cloud.
struct SpatialTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  bool operator==(const SpatialTransform& o) const { return rotation == o.rotation && translation == o.translation; }
};

/// Throws ValidationError unless the rotation is proper within 1e-9.
void validate(const SpatialTransform& t);

struct AugmentationSchedule {
  double knee = 0.8;
};

/// min(t / (knee * L), 1).
double clipped_growth(std::size_t t, std::size_t length, double knee = 0.8);

/// X_t + g(t) (T(X_t) - X_t) per frame; directions renormalized. Frames with
/// g = 0 are copied and frames with g = 1 are T(X_t) exactly.
FuncRepTrajectory augment_rep_trajectory(const FuncRepTrajectory& traj, const SpatialTransform& transform,
                                         const AugmentationSchedule& schedule = {});

/// A grid transform with its provenance.
struct GridTransform {
  SpatialTransform transform;
  std::size_t anchor = 0;
  std::size_t gx = 0;
  std::size_t gy = 0;
};

/// For each anchor (an offset from the demo's object position), n*n pure
/// translations anchor + (dx, dy, 0) with dx, dy on an even grid over
/// [-range, range]; n = 1 gives offset (0, 0).
std::vector<GridTransform> grid_transforms(std::span<const Vec3> anchors, std::size_t n, double range);

/// Masked points move by the partial transform: rotation angle and
/// translation both scaled by g. Other points are copied.
PointCloud augment_scene_cloud(const PointCloud& pc, const std::vector<bool>& object_mask,
                               const SpatialTransform& transform, double g);

nlohmann::json transforms_to_json(std::span<const GridTransform> transforms);
std::vector<GridTransform> transforms_from_json(const nlohmann::json& doc);

}  // namespace cei
