#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cei/chamfer.hpp"
#include "cei/funcrep.hpp"
#include "cei/obs_synth.hpp"
#include "cei/random.hpp"
#include "cei/robot_model.hpp"

namespace cei::testing {

std::filesystem::path fixture(const std::string& name);
/// Fresh empty directory under the build tree's scratch area.
std::filesystem::path scratch_dir(const std::string& name);

Embodiment load_fixture(const std::string& stem);  // <stem>.urdf with its manifest
EmbodimentManifest fixture_manifest(const std::string& stem);

// ---------------------------------------------------------------------------
// Oracles, written independently of the library code paths.

/// World 4x4 transform of every link, keyed by link name, built by recursion
/// from the root with explicit homogeneous matrices.
std::vector<std::pair<std::string, Eigen::Matrix4d>> oracle_link_transforms(const Embodiment& e,
                                                                            const JointConfiguration& q);

/// Exhaustive double-loop DCD.
double oracle_dcd(const WorldFuncRep& x, const WorldFuncRep& y, double lambda, double epsilon);

/// Central differences of f at q with step h.
Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& q,
                                   double h);

/// Greedy FPS recomputing every distance from scratch at each pick.
std::vector<std::size_t> oracle_fps(const std::vector<Vec3>& points, std::size_t n, std::size_t start);

/// Upper bound on the distance from p to the convex hull of `points`
/// (Frank-Wolfe with exact line search; the iterate stays in the hull).
double hull_distance_upper_bound(const Vec3& p, const Eigen::Matrix3Xd& points, int iterations = 4000);

// ---------------------------------------------------------------------------
// Generators.

/// Random tree with `joints` joints of mixed kinds (at least one non-fixed),
/// random origins and unit axes, box geometry on every link.
Embodiment random_embodiment(Rng& rng, std::size_t joints);
JointConfiguration random_configuration(Rng& rng, const Embodiment& e, double margin = 0.0);
WorldFuncRep random_rep(Rng& rng, std::size_t n, double spread = 0.1);

/// Joint-space demonstration through `keyframes` (smoothstep blend) with a
/// scene cloud of table, a cube at `object_center` and raw robot points.
struct DemoSpec {
  std::string id = "demo";
  std::size_t length = 20;
  std::vector<JointConfiguration> keyframes;
  std::uint64_t seed = 0;
  std::size_t table_points = 400;
  std::size_t object_points = 150;
  std::size_t robot_points = 600;
  std::size_t outlier_points = 20;
  Vec3 object_center = Vec3(0.4, 0.0, 0.025);
  double object_half = 0.025;
};

std::vector<JointConfiguration> keyframe_trajectory(const std::vector<JointConfiguration>& keyframes,
                                                    std::size_t length);
Demonstration make_demo(const Embodiment& e, const DemoSpec& spec);

/// Pinch demo for the arm6 gripper fixture: approach, close on a cube, lift.
/// `variant` perturbs keyframes; lengths are set by the caller.
Demonstration arm6_pinch_demo(const Embodiment& gripper, const std::string& id, std::size_t length,
                              std::uint64_t variant);

/// Writes the demos plus index into `root`.
void write_dataset(const std::filesystem::path& root, const std::vector<Demonstration>& demos);

}  // namespace cei::testing
