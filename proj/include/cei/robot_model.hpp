#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "cei/geometry.hpp"

namespace cei {

struct TriangleMesh {
  std::vector<Vec3> vertices;  // meters
  std::vector<std::array<int, 3>> faces;

  bool operator==(const TriangleMesh&) const = default;
};

struct BoxPrimitive {
  Vec3 half_extents = Vec3::Zero();

  bool operator==(const BoxPrimitive&) const = default;
};

/// Surface geometry attached to a link, placed by `origin` in the link frame.
struct LinkGeometry {
  std::variant<TriangleMesh, BoxPrimitive> shape;
  Origin origin;

  bool operator==(const LinkGeometry&) const = default;
};

enum class JointKind { revolute, prismatic, fixed };

std::string_view to_string(JointKind kind);

struct JointSpec {
  std::string name;
  JointKind kind = JointKind::fixed;
  std::string parent_link;
  std::string child_link;
  Vec3 axis = Vec3::UnitZ();
  Origin origin;
  double lower = 0.0;
  double upper = 0.0;

  bool operator==(const JointSpec&) const = default;
};

struct LinkSpec {
  std::string name;
  std::optional<LinkGeometry> geometry;
  std::string parent_joint;  // empty for the root link

  bool operator==(const LinkSpec&) const = default;
};

/// A robot: kinematic tree, limits, and surface geometry.
///
/// Links and joints are stored in depth-first order from the root; the order
/// of non-fixed joints defines the layout of a JointConfiguration. Build one
/// with assemble_embodiment() or parse_robot_description(); the index tables
/// below are derived from the specs and must stay consistent with them.
struct Embodiment {
  std::string name;
  std::vector<LinkSpec> links;
  std::vector<JointSpec> joints;

  std::vector<int> link_parent_joint;  // -1 for the root
  std::vector<int> joint_parent_link;
  std::vector<int> joint_child_link;
  std::vector<int> joint_dof;   // dof index or -1 for fixed joints
  std::vector<int> dof_joint;   // joint index per dof

  std::vector<std::size_t> arm_indices;  // dof indices, ascending
  std::vector<std::size_t> ee_indices;

  Pose base;  // world <- root link
  Origin base_origin;

  std::size_t dof() const { return dof_joint.size(); }
  std::optional<std::size_t> find_link(std::string_view link) const;
  std::optional<std::size_t> find_joint(std::string_view joint) const;
  /// Index of `link`, or throws ValidationError.
  std::size_t link_index(std::string_view link) const;
  const JointSpec& dof_spec(std::size_t dof_index) const { return joints[dof_joint[dof_index]]; }

  bool operator==(const Embodiment&) const = default;
};

/// Joint values ordered by the embodiment's dof layout (radians / meters).
struct JointConfiguration {
  Eigen::VectorXd values;

  JointConfiguration() = default;
  explicit JointConfiguration(Eigen::VectorXd v) : values(std::move(v)) {}
  static JointConfiguration zeros(std::size_t n) { return JointConfiguration(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n))); }

  std::size_t size() const { return static_cast<std::size_t>(values.size()); }
  double operator[](std::size_t i) const { return values[static_cast<Eigen::Index>(i)]; }
  double& operator[](std::size_t i) { return values[static_cast<Eigen::Index>(i)]; }
  bool operator==(const JointConfiguration& other) const { return values == other.values; }
};

/// Throws DimensionError unless q has e.dof() finite entries.
void check_configuration(const Embodiment& e, const JointConfiguration& q);
/// (lower + upper) / 2 per dof.
JointConfiguration mid_range_configuration(const Embodiment& e);
/// Splits q into (arm values, ee values) following the manifest partition.
std::pair<Eigen::VectorXd, Eigen::VectorXd> split_configuration(const Embodiment& e, const JointConfiguration& q);
JointConfiguration join_configuration(const Embodiment& e, const Eigen::VectorXd& arm, const Eigen::VectorXd& ee);
/// Component-wise clamp to [lower, upper].
JointConfiguration clamp_to_limits(const Embodiment& e, const JointConfiguration& q);

/// Sidecar declaring the arm/end-effector split, contact pads, workspace and
/// the world-to-base transform.
struct EmbodimentManifest {
  std::vector<std::string> arm_joints;
  std::vector<std::string> ee_joints;
  std::vector<std::string> pad_links;
  std::optional<Aabb> workspace;
  Origin base;
};

EmbodimentManifest parse_manifest(std::string_view json_text);
EmbodimentManifest load_manifest(const std::filesystem::path& path);
/// Sets the dof partition and base transform. A missing arm or ee list is the
/// complement of the other; both missing puts every dof in the arm.
void apply_manifest(Embodiment& e, const EmbodimentManifest& manifest);

enum class DescriptionFormat { urdf_subset, native };

/// Orders links/joints depth-first, fills index tables and checks the tree.
/// Throws StructureError (cycles, several roots, dangling references) or
/// ValidationError (any validate_embodiment diagnostic).
Embodiment assemble_embodiment(std::string name, std::vector<LinkSpec> links, std::vector<JointSpec> joints);

/// Parses a URDF subset or the native JSON format. Relative mesh filenames
/// are resolved against `base_dir`. Unsupported URDF elements are skipped
/// with a warning.
Embodiment parse_robot_description(std::string_view text, DescriptionFormat format,
                                   const std::filesystem::path& base_dir = {});

/// Loads a description by extension (.urdf/.xml or .json) and applies the
/// sidecar manifest if given.
Embodiment load_embodiment(const std::filesystem::path& description,
                           const std::optional<std::filesystem::path>& manifest = std::nullopt);

/// Native JSON with inline meshes; parse(serialize(e)) == e.
std::string serialize_embodiment(const Embodiment& e);

struct Diagnostic {
  std::string code;
  std::string message;
};

/// Empty iff every Embodiment invariant holds.
std::vector<Diagnostic> validate_embodiment(const Embodiment& e);

struct SurfaceSample {
  Vec3 point;   // link frame
  Vec3 normal;  // outward unit normal, link frame
  std::size_t face = 0;

  bool operator==(const SurfaceSample&) const = default;
};

/// `count` area-weighted surface samples of one link's geometry, in the link
/// frame. Box primitives are stratified per face (largest-remainder split by
/// area); meshes draw faces independently. Deterministic for a fixed seed.
std::vector<SurfaceSample> sample_link_surface(const Embodiment& e, std::string_view link,
                                               std::size_t count, std::uint64_t seed);

/// Triangle soup of one geometry in its link frame, normals oriented outward
/// by majority vote against the area-weighted centroid.
struct OrientedTriangles {
  std::vector<std::array<Vec3, 3>> triangles;
  std::vector<Vec3> normals;
  std::vector<double> areas;
  Vec3 centroid = Vec3::Zero();
  double total_area = 0.0;
};

OrientedTriangles triangulate_geometry(const LinkGeometry& geometry);

}  // namespace cei
