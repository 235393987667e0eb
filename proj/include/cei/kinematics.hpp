#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "cei/geometry.hpp"
#include "cei/robot_model.hpp"

namespace cei {

/// World poses of every link, plus each joint's frame before its motion is
/// applied (parent pose * joint origin). Indexed like Embodiment::links/joints.
struct LinkPoseSet {
  std::vector<Pose> links;
  std::vector<Pose> joint_frames;
};

/// A point and unit direction rigidly attached to a link (link frame).
struct AttachedPoint {
  std::size_t link = 0;
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();

  bool operator==(const AttachedPoint&) const = default;
};

/// Point-direction set in the world frame; column i is pair i.
struct WorldFuncRep {
  Eigen::Matrix3Xd points;
  Eigen::Matrix3Xd directions;

  std::size_t size() const { return static_cast<std::size_t>(points.cols()); }
  bool operator==(const WorldFuncRep& other) const {
    return points == other.points && directions == other.directions;
  }
};

/// dL/dp and dL/dn for each pair of a WorldFuncRep.
struct GradientCotangent {
  Eigen::Matrix3Xd d_points;
  Eigen::Matrix3Xd d_directions;

  static GradientCotangent zeros(std::size_t n) {
    const auto cols = static_cast<Eigen::Index>(n);
    return {Eigen::Matrix3Xd::Zero(3, cols), Eigen::Matrix3Xd::Zero(3, cols)};
  }
};

LinkPoseSet forward_kinematics(const Embodiment& e, const JointConfiguration& q);

/// p_world = R p_local + t, n_world = R n_local, per attached point.
WorldFuncRep evaluate_world_set(const Embodiment& e, const JointConfiguration& q, std::span<const AttachedPoint> local);
WorldFuncRep evaluate_world_set(const Embodiment& e, const LinkPoseSet& poses, std::span<const AttachedPoint> local);

/// Reverse-mode derivative of evaluate_world_set(forward_kinematics(q))
/// contracted with `cotangent`; one entry per dof.
Eigen::VectorXd pullback_to_joints(const Embodiment& e, const JointConfiguration& q,
                                   std::span<const AttachedPoint> local, const GradientCotangent& cotangent);
/// Same, reusing poses and the already evaluated world set.
Eigen::VectorXd pullback_to_joints(const Embodiment& e, const LinkPoseSet& poses, std::span<const AttachedPoint> local,
                                   const WorldFuncRep& world, const GradientCotangent& cotangent);

/// Batched forms over frames or candidate configurations. Element k equals the
/// unbatched call on configs[k] regardless of `workers`.
std::vector<LinkPoseSet> forward_kinematics_batch(const Embodiment& e, std::span<const JointConfiguration> configs,
                                                  unsigned workers = 1);
std::vector<WorldFuncRep> evaluate_world_set_batch(const Embodiment& e, std::span<const JointConfiguration> configs,
                                                   std::span<const AttachedPoint> local, unsigned workers = 1);

}  // namespace cei
