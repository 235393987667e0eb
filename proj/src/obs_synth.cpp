#include "cei/obs_synth.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "cei/errors.hpp"
#include "cei/kinematics.hpp"
#include "cei/log.hpp"
#include "cei/parallel.hpp"
#include "cei/random.hpp"
#include "cei/spatial_index.hpp"

namespace cei {

PointCloud PointCloud::scene(std::vector<Vec3> points) {
  PointCloud pc;
  pc.tags.assign(points.size(), PointTag::scene);
  pc.points = std::move(points);
  return pc;
}

JointConfiguration observed_configuration(const Embodiment& e, const DemoFrame& frame) {
  return join_configuration(e, frame.observation.arm, frame.observation.ee);
}

void check_demonstration(const Demonstration& demo, const Embodiment& e) {
  if (demo.frames.empty()) throw ValidationError("demonstration '" + demo.id + "' has no frames");
  const auto arm = static_cast<Eigen::Index>(e.arm_indices.size());
  const auto ee = static_cast<Eigen::Index>(e.ee_indices.size());
  for (std::size_t t = 0; t < demo.size(); ++t) {
    const auto& f = demo.frames[t];
    if (f.observation.arm.size() != arm || f.observation.ee.size() != ee || f.action.arm.size() != arm ||
        f.action.ee.size() != ee) {
      throw ValidationError("frame " + std::to_string(t) + " does not match the " + std::to_string(arm) + "/" +
                            std::to_string(ee) + " arm/ee split of '" + e.name + "'");
    }
    if (f.observation.cloud.tags.size() != f.observation.cloud.points.size()) {
      throw ValidationError("frame " + std::to_string(t) + ": point tags do not match point count");
    }
  }
}

void validate(const SynthConfig& cfg) {
  if (!(cfg.tau > 0.0)) throw ValidationError("tau must be positive");
  if (cfg.output_size < 1) throw ValidationError("output size must be >= 1");
  if (cfg.robot_samples < 1) throw ValidationError("robot sample count must be >= 1");
  if (!cfg.workspace.valid()) throw ValidationError("workspace box needs min < max on every axis");
}

std::vector<Action> generate_actions(const Embodiment& e, std::span<const JointConfiguration> aligned) {
  if (aligned.empty()) throw ValidationError("cannot generate actions from an empty trajectory");
  std::vector<Action> actions;
  actions.reserve(aligned.size());
  for (std::size_t t = 0; t < aligned.size(); ++t) {
    const auto& next = aligned[std::min(t + 1, aligned.size() - 1)];
    auto [arm, ee] = split_configuration(e, next);
    actions.push_back({std::move(arm), std::move(ee)});
  }
  return actions;
}

PointCloud crop_workspace(const PointCloud& pc, const Aabb& box) {
  PointCloud out;
  for (std::size_t i = 0; i < pc.size(); ++i) {
    if (box.contains(pc.points[i])) out.push_back(pc.points[i], pc.tags[i]);
  }
  return out;
}

PointCloud mask_robot_points(const PointCloud& pc, const PointCloud& robot_samples, double tau) {
  if (robot_samples.size() == 0) throw ValidationError("masking needs at least one robot sample");
  if (!(tau > 0.0)) throw ValidationError("tau must be positive");
  const SparseGrid grid(robot_samples.points, tau);
  PointCloud out;
  for (std::size_t i = 0; i < pc.size(); ++i) {
    if (!grid.any_within(pc.points[i], tau)) out.push_back(pc.points[i], pc.tags[i]);
  }
  return out;
}

RobotSurfaceSampler::RobotSurfaceSampler(const Embodiment& e) : e_(&e) {
  double total = 0.0;
  std::vector<std::string> bare;
  for (std::size_t k = 0; k < e.links.size(); ++k) {
    if (!e.links[k].geometry) {
      bare.push_back(e.links[k].name);
      continue;
    }
    total += triangulate_geometry(*e.links[k].geometry).total_area;
    links_.push_back(k);
    cumulative_area_.push_back(total);
  }
  if (!bare.empty() && !links_.empty()) {
    std::string names;
    for (const auto& n : bare) names += (names.empty() ? "" : ", ") + n;
    warn("embodiment '" + e.name + "': links without geometry are not sampled (" + names + ")");
  }
  if (links_.empty()) throw ValidationError("embodiment '" + e.name + "' has no link geometry to sample");
}

std::vector<std::size_t> RobotSurfaceSampler::allocate(std::size_t count, std::uint64_t seed) const {
  std::vector<std::size_t> per_link(e_->links.size(), 0);
  Rng rng(seed);
  const double total = cumulative_area_.back();
  for (std::size_t s = 0; s < count; ++s) {
    const double u = rng.uniform() * total;
    auto it = std::upper_bound(cumulative_area_.begin(), cumulative_area_.end(), u);
    if (it == cumulative_area_.end()) --it;
    ++per_link[links_[static_cast<std::size_t>(it - cumulative_area_.begin())]];
  }
  return per_link;
}

PointCloud RobotSurfaceSampler::sample(const JointConfiguration& q, std::size_t count, std::uint64_t seed,
                                       std::vector<std::size_t>* link_of) const {
  const auto per_link = allocate(count, combine_seed(seed, 0));
  const LinkPoseSet poses = forward_kinematics(*e_, q);
  PointCloud out;
  out.points.reserve(count);
  out.tags.reserve(count);
  if (link_of) link_of->clear();
  for (std::size_t k : links_) {
    if (per_link[k] == 0) continue;
    const auto samples = sample_link_surface(*e_, e_->links[k].name, per_link[k], combine_seed(seed, k + 1));
    for (const auto& s : samples) {
      out.push_back(poses.links[k].apply(s.point), PointTag::robot);
      if (link_of) link_of->push_back(k);
    }
  }
  return out;
}

PointCloud sample_robot_cloud(const Embodiment& e, const JointConfiguration& q, std::size_t count, std::uint64_t seed) {
  return RobotSurfaceSampler(e).sample(q, count, seed);
}

PointCloud fps_downsample(const PointCloud& pc, std::size_t n, std::size_t start_index, std::uint64_t seed) {
  if (n < 1) throw ValidationError("FPS output size must be >= 1");
  const std::size_t m = pc.size();
  if (m == 0) throw ValidationError("cannot downsample an empty point cloud");
  PointCloud out;
  out.points.reserve(n);
  out.tags.reserve(n);
  if (m < n) {
    out = pc;
    Rng rng(seed);
    while (out.size() < n) {
      const std::size_t k = rng.index(m);
      out.push_back(pc.points[k], pc.tags[k]);
    }
    return out;
  }
  if (start_index >= m) throw ValidationError("FPS start index out of range");
  std::vector<double> nearest(m, std::numeric_limits<double>::infinity());
  std::size_t current = start_index;
  for (std::size_t picked = 0; picked < n; ++picked) {
    out.push_back(pc.points[current], pc.tags[current]);
    nearest[current] = -1.0;
    const Vec3 c = pc.points[current];
    std::size_t best = 0;
    double best_distance = -1.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (nearest[i] < 0.0) continue;
      const double d = (pc.points[i] - c).squaredNorm();
      if (d < nearest[i]) nearest[i] = d;
      if (nearest[i] > best_distance) {
        best_distance = nearest[i];
        best = i;
      }
    }
    current = best;
  }
  return out;
}

SynthContext::SynthContext(const Embodiment& source_e, const Embodiment& target_e)
    : source(source_e), target(target_e), source_sampler(source_e), target_sampler(target_e) {}

PointCloud synthesize_observation(const PointCloud& source_pc, const SynthContext& ctx,
                                  const JointConfiguration& source_q, const JointConfiguration& target_q,
                                  const SynthConfig& cfg, std::uint64_t frame_seed, SynthStageCounts* counts) {
  validate(cfg);
  auto stage = [](const char* name, auto&& fn) {
    try {
      return fn();
    } catch (const Error& err) {
      throw Error(std::string(name) + ": " + err.what());
    }
  };
  PointCloud cloud = stage("crop", [&] { return crop_workspace(source_pc, cfg.workspace); });
  const std::size_t cropped = cloud.size();
  cloud = stage("mask", [&] {
    const PointCloud robot = ctx.source_sampler.sample(source_q, cfg.robot_samples, combine_seed(frame_seed, 1));
    return mask_robot_points(cloud, robot, cfg.tau);
  });
  const std::size_t masked = cloud.size();
  stage("augment", [&] {
    const PointCloud robot = ctx.target_sampler.sample(target_q, cfg.robot_samples, combine_seed(frame_seed, 2));
    cloud.points.insert(cloud.points.end(), robot.points.begin(), robot.points.end());
    cloud.tags.insert(cloud.tags.end(), robot.tags.begin(), robot.tags.end());
    return 0;
  });
  const std::size_t augmented = cloud.size();
  PointCloud out = stage("fps", [&] { return fps_downsample(cloud, cfg.output_size, 0, combine_seed(frame_seed, 3)); });
  if (counts) *counts = {source_pc.size(), cropped, masked, augmented, out.size()};
  return out;
}

PointCloud synthesize_observation(const PointCloud& source_pc, const Embodiment& source_e,
                                  const JointConfiguration& source_q, const Embodiment& target_e,
                                  const JointConfiguration& target_q, const SynthConfig& cfg,
                                  std::uint64_t frame_seed, SynthStageCounts* counts) {
  const SynthContext ctx(source_e, target_e);
  return synthesize_observation(source_pc, ctx, source_q, target_q, cfg, frame_seed, counts);
}

Demonstration synthesize_demonstration(const Demonstration& source_demo, const Embodiment& source_e,
                                       const Embodiment& target_e, std::span<const JointConfiguration> aligned,
                                       const SynthConfig& cfg, unsigned workers) {
  validate(cfg);
  if (aligned.size() != source_demo.size()) {
    throw ValidationError("aligned trajectory has " + std::to_string(aligned.size()) + " frames, demonstration '" +
                          source_demo.id + "' has " + std::to_string(source_demo.size()));
  }
  check_demonstration(source_demo, source_e);
  for (const auto& q : aligned) check_configuration(target_e, q);

  const auto actions = generate_actions(target_e, aligned);
  const SynthContext ctx(source_e, target_e);
  Demonstration out;
  out.id = source_demo.id;
  out.embodiment = target_e.name;
  out.initial_state = source_demo.initial_state;
  out.seed = cfg.seed;
  out.frames.resize(source_demo.size());
  parallel_for(source_demo.size(), workers, [&](std::size_t t) {
    const auto& src = source_demo.frames[t];
    auto& dst = out.frames[t];
    const std::uint64_t seed = derive_frame_seed(cfg.seed, source_demo.id, t);
    try {
      dst.observation.cloud = synthesize_observation(src.observation.cloud, ctx, observed_configuration(source_e, src),
                                                     aligned[t], cfg, seed);
    } catch (const Error& err) {
      throw Error("frame " + std::to_string(t) + ": " + err.what());
    }
    std::tie(dst.observation.arm, dst.observation.ee) = split_configuration(target_e, aligned[t]);
    dst.action = actions[t];
  });
  return out;
}

}  // namespace cei
