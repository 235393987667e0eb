#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "cei/geometry.hpp"
#include "cei/robot_model.hpp"

namespace cei {

enum class PointTag : std::uint8_t { scene = 0, robot = 1 };

/// World-frame points with one tag per point.
struct PointCloud {
  std::vector<Vec3> points;
  std::vector<PointTag> tags;

  std::size_t size() const { return points.size(); }
  void push_back(const Vec3& p, PointTag tag) {
    points.push_back(p);
    tags.push_back(tag);
  }
  static PointCloud scene(std::vector<Vec3> points);
  bool operator==(const PointCloud&) const = default;
};

struct Observation {
  PointCloud cloud;
  Eigen::VectorXd arm;
  Eigen::VectorXd ee;

  bool operator==(const Observation&) const = default;
};

struct Action {
  Eigen::VectorXd arm;
  Eigen::VectorXd ee;

  bool operator==(const Action&) const = default;
};

struct DemoFrame {
  Observation observation;
  Action action;

  bool operator==(const DemoFrame&) const = default;
};

struct Demonstration {
  std::string id;
  std::string embodiment;
  nlohmann::json initial_state = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::vector<DemoFrame> frames;

  std::size_t size() const { return frames.size(); }
  bool operator==(const Demonstration&) const = default;
};

/// Proprioception of frame t joined back into the embodiment's dof layout.
JointConfiguration observed_configuration(const Embodiment& e, const DemoFrame& frame);
/// Throws ValidationError unless every frame matches e's arm/ee split and L >= 1.
void check_demonstration(const Demonstration& demo, const Embodiment& e);

struct SynthConfig {
  double tau = 0.005;
  Aabb workspace{Vec3::Constant(-1.0), Vec3::Constant(1.0)};
  std::size_t robot_samples = 4096;
  std::size_t output_size = 1024;
  std::uint64_t seed = 0;
};

void validate(const SynthConfig& cfg);

/// a_t = q_{t+1}, last action holds q_{L-1}; split by the manifest partition.
std::vector<Action> generate_actions(const Embodiment& e, std::span<const JointConfiguration> aligned);

/// Points with min <= p <= max on every axis, order preserved.
PointCloud crop_workspace(const PointCloud& pc, const Aabb& box);

/// Drops points closer than tau (strictly) to any robot sample, order preserved.
PointCloud mask_robot_points(const PointCloud& pc, const PointCloud& robot_samples, double tau);

/// Surface sampler over every link with geometry, weighted by surface area.
class RobotSurfaceSampler {
 public:
  explicit RobotSurfaceSampler(const Embodiment& e);

  /// Samples per link (multinomial in link area), indexed like e.links.
  std::vector<std::size_t> allocate(std::size_t count, std::uint64_t seed) const;
  /// Posed samples tagged robot. `link_of`, if given, receives the link index per point.
  PointCloud sample(const JointConfiguration& q, std::size_t count, std::uint64_t seed,
                    std::vector<std::size_t>* link_of = nullptr) const;

 private:
  const Embodiment* e_;
  std::vector<std::size_t> links_;  // links with geometry
  std::vector<double> cumulative_area_;
};

PointCloud sample_robot_cloud(const Embodiment& e, const JointConfiguration& q, std::size_t count, std::uint64_t seed);

/// Greedy farthest-point selection from `start_index` (ties to the lowest
/// index), in selection order. Smaller inputs are padded with uniform
/// resamples drawn from `seed` so the output has exactly n points.
PointCloud fps_downsample(const PointCloud& pc, std::size_t n, std::size_t start_index = 0, std::uint64_t seed = 0);

/// Point counts after each stage, for tests and reports.
struct SynthStageCounts {
  std::size_t input = 0;
  std::size_t cropped = 0;
  std::size_t masked = 0;
  std::size_t augmented = 0;
  std::size_t output = 0;
};

/// Per-frame samplers, reused across frames of one demonstration.
struct SynthContext {
  const Embodiment& source;
  const Embodiment& target;
  RobotSurfaceSampler source_sampler;
  RobotSurfaceSampler target_sampler;

  SynthContext(const Embodiment& source_e, const Embodiment& target_e);
};

/// crop -> mask source robot -> add target robot samples -> FPS.
PointCloud synthesize_observation(const PointCloud& source_pc, const SynthContext& ctx,
                                  const JointConfiguration& source_q, const JointConfiguration& target_q,
                                  const SynthConfig& cfg, std::uint64_t frame_seed,
                                  SynthStageCounts* counts = nullptr);
PointCloud synthesize_observation(const PointCloud& source_pc, const Embodiment& source_e,
                                  const JointConfiguration& source_q, const Embodiment& target_e,
                                  const JointConfiguration& target_q, const SynthConfig& cfg,
                                  std::uint64_t frame_seed, SynthStageCounts* counts = nullptr);

/// Target demonstration with proprioception q_t, generated actions, and
/// per-frame seeds hash(cfg.seed, demo id, t).
Demonstration synthesize_demonstration(const Demonstration& source_demo, const Embodiment& source_e,
                                       const Embodiment& target_e, std::span<const JointConfiguration> aligned,
                                       const SynthConfig& cfg, unsigned workers = 1);

}  // namespace cei
