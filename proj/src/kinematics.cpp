#include "cei/kinematics.hpp"

#include <string>

#include "cei/errors.hpp"
#include "cei/parallel.hpp"

namespace cei {
namespace {

void check_links(const Embodiment& e, std::span<const AttachedPoint> local) {
  for (const auto& a : local) {
    if (a.link >= e.links.size()) {
      throw ValidationError("attached point references unknown link id " + std::to_string(a.link) + " in '" +
                            e.name + "'");
    }
  }
}

}  // namespace

LinkPoseSet forward_kinematics(const Embodiment& e, const JointConfiguration& q) {
  check_configuration(e, q);
  LinkPoseSet out;
  out.links.resize(e.links.size());
  out.joint_frames.resize(e.joints.size());
  out.links[0] = e.base;
  // Depth-first storage guarantees the parent link is posed before its joints.
  for (std::size_t j = 0; j < e.joints.size(); ++j) {
    const auto& spec = e.joints[j];
    const Pose frame = out.links[static_cast<std::size_t>(e.joint_parent_link[j])] * spec.origin.pose();
    out.joint_frames[j] = frame;
    Pose motion;
    if (spec.kind == JointKind::revolute) {
      motion.rotation = axis_angle_rotation(spec.axis, q[static_cast<std::size_t>(e.joint_dof[j])]);
    } else if (spec.kind == JointKind::prismatic) {
      motion.translation = spec.axis * q[static_cast<std::size_t>(e.joint_dof[j])];
    }
    out.links[static_cast<std::size_t>(e.joint_child_link[j])] = frame * motion;
  }
  return out;
}

WorldFuncRep evaluate_world_set(const Embodiment& e, const LinkPoseSet& poses, std::span<const AttachedPoint> local) {
  check_links(e, local);
  WorldFuncRep out;
  const auto n = static_cast<Eigen::Index>(local.size());
  out.points.resize(3, n);
  out.directions.resize(3, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& a = local[static_cast<std::size_t>(i)];
    const Pose& pose = poses.links[a.link];
    out.points.col(i) = pose.apply(a.point);
    out.directions.col(i) = pose.rotate(a.normal);
  }
  return out;
}

WorldFuncRep evaluate_world_set(const Embodiment& e, const JointConfiguration& q, std::span<const AttachedPoint> local) {
  return evaluate_world_set(e, forward_kinematics(e, q), local);
}

Eigen::VectorXd pullback_to_joints(const Embodiment& e, const LinkPoseSet& poses, std::span<const AttachedPoint> local,
                                   const WorldFuncRep& world, const GradientCotangent& cotangent) {
  check_links(e, local);
  const auto n = static_cast<Eigen::Index>(local.size());
  if (world.points.cols() != n || cotangent.d_points.cols() != n || cotangent.d_directions.cols() != n) {
    throw DimensionError("cotangent has " + std::to_string(cotangent.d_points.cols()) + " entries, set has " +
                         std::to_string(n));
  }
  // Per link: net force F = sum dL/dp and moment M = sum p x dL/dp + n x dL/dn.
  // A revolute joint through o with axis a then sees a . (M - o x F) from its
  // subtree; a prismatic joint sees a . F.
  std::vector<Vec3> force(e.links.size(), Vec3::Zero());
  std::vector<Vec3> moment(e.links.size(), Vec3::Zero());
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::size_t link = local[static_cast<std::size_t>(i)].link;
    const Vec3 gp = cotangent.d_points.col(i);
    const Vec3 gn = cotangent.d_directions.col(i);
    force[link] += gp;
    moment[link] += Vec3(world.points.col(i)).cross(gp) + Vec3(world.directions.col(i)).cross(gn);
  }

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(e.dof()));
  for (std::size_t jj = e.joints.size(); jj-- > 0;) {
    const auto child = static_cast<std::size_t>(e.joint_child_link[jj]);
    const auto parent = static_cast<std::size_t>(e.joint_parent_link[jj]);
    const auto& spec = e.joints[jj];
    if (spec.kind != JointKind::fixed) {
      const Pose& frame = poses.joint_frames[jj];
      const Vec3 axis = frame.rotate(spec.axis);
      const auto d = static_cast<Eigen::Index>(e.joint_dof[jj]);
      if (spec.kind == JointKind::revolute) {
        grad[d] = axis.dot(moment[child] - frame.translation.cross(force[child]));
      } else {
        grad[d] = axis.dot(force[child]);
      }
    }
    force[parent] += force[child];
    moment[parent] += moment[child];
  }
  return grad;
}

Eigen::VectorXd pullback_to_joints(const Embodiment& e, const JointConfiguration& q,
                                   std::span<const AttachedPoint> local, const GradientCotangent& cotangent) {
  const LinkPoseSet poses = forward_kinematics(e, q);
  return pullback_to_joints(e, poses, local, evaluate_world_set(e, poses, local), cotangent);
}

std::vector<LinkPoseSet> forward_kinematics_batch(const Embodiment& e, std::span<const JointConfiguration> configs,
                                                  unsigned workers) {
  std::vector<LinkPoseSet> out(configs.size());
  parallel_for(configs.size(), workers, [&](std::size_t k) { out[k] = forward_kinematics(e, configs[k]); });
  return out;
}

std::vector<WorldFuncRep> evaluate_world_set_batch(const Embodiment& e, std::span<const JointConfiguration> configs,
                                                   std::span<const AttachedPoint> local, unsigned workers) {
  std::vector<WorldFuncRep> out(configs.size());
  parallel_for(configs.size(), workers, [&](std::size_t k) { out[k] = evaluate_world_set(e, configs[k], local); });
  return out;
}

}  // namespace cei
