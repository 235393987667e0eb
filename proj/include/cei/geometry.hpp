#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace cei {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Rigid transform: x -> rotation * x + translation.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static Pose identity() { return {}; }
  static Pose from_translation(const Vec3& t) { return {Mat3::Identity(), t}; }

  Pose operator*(const Pose& other) const {
    return {rotation * other.rotation, rotation * other.translation + translation};
  }
  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  Vec3 rotate(const Vec3& v) const { return rotation * v; }
  Pose inverse() const;
  Eigen::Matrix4d matrix() const;

  bool operator==(const Pose& other) const {
    return rotation == other.rotation && translation == other.translation;
  }
};

/// URDF fixed-axis roll/pitch/yaw: R = Rz(yaw) * Ry(pitch) * Rx(roll).
Mat3 rotation_from_rpy(const Vec3& rpy);

/// Rotation of `angle` radians about the unit `axis` (Rodrigues).
Mat3 axis_angle_rotation(const Vec3& axis, double angle);

/// Origin as authored in a description file; the pose is derived on demand so
/// serialization round-trips bit-exactly.
struct Origin {
  Vec3 xyz = Vec3::Zero();
  Vec3 rpy = Vec3::Zero();

  Pose pose() const { return {rotation_from_rpy(rpy), xyz}; }
  bool is_identity() const { return xyz.isZero(0.0) && rpy.isZero(0.0); }
  bool operator==(const Origin& other) const { return xyz == other.xyz && rpy == other.rpy; }
};

/// Axis-aligned box, bounds inclusive.
struct Aabb {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
  bool valid() const { return (min.array() < max.array()).all(); }
  bool operator==(const Aabb& other) const { return min == other.min && max == other.max; }
};

/// Max deviation of R from a proper rotation, as max(|R^T R - I|, |det R - 1|).
double orthonormality_error(const Mat3& r);

}  // namespace cei
