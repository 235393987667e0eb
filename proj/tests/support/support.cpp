#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>

#include <Eigen/Geometry>

#include "cei/dataset_io.hpp"
#include "cei/kinematics.hpp"

namespace cei::testing {
namespace fs = std::filesystem;

fs::path fixture(const std::string& name) { return fs::path(CEI_FIXTURE_DIR) / name; }

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::path(CEI_SCRATCH_DIR) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Embodiment load_fixture(const std::string& stem) {
  const fs::path manifest = fixture(stem + ".manifest.json");
  if (fs::exists(manifest)) return load_embodiment(fixture(stem + ".urdf"), manifest);
  return load_embodiment(fixture(stem + ".urdf"));
}

EmbodimentManifest fixture_manifest(const std::string& stem) { return load_manifest(fixture(stem + ".manifest.json")); }

namespace {

Eigen::Matrix4d homogeneous(const Eigen::Matrix3d& r, const Eigen::Vector3d& t) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = r;
  m.topRightCorner<3, 1>() = t;
  return m;
}

Eigen::Matrix4d origin_matrix(const Origin& o) {
  const Eigen::Matrix3d r = (Eigen::AngleAxisd(o.rpy.z(), Eigen::Vector3d::UnitZ()) *
                             Eigen::AngleAxisd(o.rpy.y(), Eigen::Vector3d::UnitY()) *
                             Eigen::AngleAxisd(o.rpy.x(), Eigen::Vector3d::UnitX()))
                                .toRotationMatrix();
  return homogeneous(r, o.xyz);
}

}  // namespace

std::vector<std::pair<std::string, Eigen::Matrix4d>> oracle_link_transforms(const Embodiment& e,
                                                                            const JointConfiguration& q) {
  // Joint values keyed by joint name, following the documented dof order.
  std::map<std::string, double> value;
  std::size_t d = 0;
  for (const auto& j : e.joints) {
    if (j.kind != JointKind::fixed) value[j.name] = q[d++];
  }
  std::map<std::string, const JointSpec*> parent_joint;
  for (const auto& j : e.joints) parent_joint[j.child_link] = &j;

  std::map<std::string, Eigen::Matrix4d> memo;
  std::function<Eigen::Matrix4d(const std::string&)> world = [&](const std::string& link) -> Eigen::Matrix4d {
    if (auto it = memo.find(link); it != memo.end()) return it->second;
    Eigen::Matrix4d m;
    auto pj = parent_joint.find(link);
    if (pj == parent_joint.end()) {
      m = origin_matrix(e.base_origin);
    } else {
      const JointSpec& j = *pj->second;
      Eigen::Matrix4d motion = Eigen::Matrix4d::Identity();
      if (j.kind == JointKind::revolute) {
        motion.topLeftCorner<3, 3>() = Eigen::AngleAxisd(value[j.name], j.axis).toRotationMatrix();
      } else if (j.kind == JointKind::prismatic) {
        motion.topRightCorner<3, 1>() = j.axis * value[j.name];
      }
      m = world(j.parent_link) * origin_matrix(j.origin) * motion;
    }
    memo[link] = m;
    return m;
  };
  std::vector<std::pair<std::string, Eigen::Matrix4d>> out;
  for (const auto& l : e.links) out.emplace_back(l.name, world(l.name));
  return out;
}

double oracle_dcd(const WorldFuncRep& x, const WorldFuncRep& y, double lambda, double epsilon) {
  auto cost = [&](const Vec3& p, const Vec3& n, const Vec3& q, const Vec3& m) {
    const Vec3 d = p - q;
    return std::sqrt(d.dot(d) + epsilon * epsilon) - epsilon - lambda * n.dot(m);
  };
  auto one_way = [&](const WorldFuncRep& a, const WorldFuncRep& b) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < a.points.cols(); ++i) {
      double best = INFINITY;
      for (Eigen::Index j = 0; j < b.points.cols(); ++j) {
        best = std::min(best, cost(a.points.col(i), a.directions.col(i), b.points.col(j), b.directions.col(j)));
      }
      sum += best;
    }
    return sum / static_cast<double>(a.points.cols());
  };
  return one_way(x, y) + one_way(y, x);
}

Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& q,
                                   double h) {
  Eigen::VectorXd g(q.size());
  for (Eigen::Index k = 0; k < q.size(); ++k) {
    Eigen::VectorXd plus = q, minus = q;
    plus[k] += h;
    minus[k] -= h;
    g[k] = (f(plus) - f(minus)) / (2.0 * h);
  }
  return g;
}

std::vector<std::size_t> oracle_fps(const std::vector<Vec3>& points, std::size_t n, std::size_t start) {
  std::vector<std::size_t> chosen{start};
  while (chosen.size() < n) {
    std::size_t best = points.size();
    double best_d = -1.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (std::find(chosen.begin(), chosen.end(), i) != chosen.end()) continue;
      double nearest = INFINITY;
      for (auto c : chosen) nearest = std::min(nearest, (points[i] - points[c]).squaredNorm());
      if (nearest > best_d) {
        best_d = nearest;
        best = i;
      }
    }
    chosen.push_back(best);
  }
  return chosen;
}

double hull_distance_upper_bound(const Vec3& p, const Eigen::Matrix3Xd& points, int iterations) {
  // Start from the closest vertex.
  Eigen::Index start = 0;
  (points.colwise() - p).colwise().squaredNorm().minCoeff(&start);
  Vec3 x = points.col(start);
  for (int it = 0; it < iterations; ++it) {
    const Vec3 grad = x - p;
    Eigen::Index s = 0;
    (grad.transpose() * points).minCoeff(&s);
    const Vec3 dir = Vec3(points.col(s)) - x;
    const double dd = dir.squaredNorm();
    if (dd <= 0.0) break;
    const double step = std::clamp(-grad.dot(dir) / dd, 0.0, 1.0);
    if (step <= 0.0) break;
    x += step * dir;
  }
  return (x - p).norm();
}

Embodiment random_embodiment(Rng& rng, std::size_t joints) {
  std::vector<LinkSpec> links;
  std::vector<JointSpec> specs;
  auto add_link = [&](std::size_t k) {
    LinkSpec l;
    l.name = "l" + std::to_string(k);
    l.geometry = LinkGeometry{BoxPrimitive{Vec3(rng.uniform(0.01, 0.05), rng.uniform(0.01, 0.05), rng.uniform(0.01, 0.05))},
                              Origin{}};
    links.push_back(l);
  };
  add_link(0);
  bool has_dof = false;
  for (std::size_t k = 0; k < joints; ++k) {
    JointSpec j;
    j.name = "j" + std::to_string(k);
    j.parent_link = links[rng.index(links.size())].name;
    add_link(k + 1);
    j.child_link = links.back().name;
    const double u = rng.uniform();
    j.kind = u < 0.55 ? JointKind::revolute : (u < 0.8 ? JointKind::prismatic : JointKind::fixed);
    if (k + 1 == joints && !has_dof) j.kind = JointKind::revolute;
    has_dof |= j.kind != JointKind::fixed;
    j.origin.xyz = Vec3(rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2));
    j.origin.rpy = Vec3(rng.uniform(-3.0, 3.0), rng.uniform(-1.5, 1.5), rng.uniform(-3.0, 3.0));
    Vec3 axis(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    while (axis.norm() < 0.1) axis = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    j.axis = axis.normalized();
    if (j.kind == JointKind::revolute) {
      j.lower = -rng.uniform(0.5, 3.0);
      j.upper = rng.uniform(0.5, 3.0);
    } else if (j.kind == JointKind::prismatic) {
      j.lower = -rng.uniform(0.05, 0.3);
      j.upper = rng.uniform(0.05, 0.3);
    }
    specs.push_back(j);
  }
  return assemble_embodiment("random", std::move(links), std::move(specs));
}

JointConfiguration random_configuration(Rng& rng, const Embodiment& e, double margin) {
  JointConfiguration q = JointConfiguration::zeros(e.dof());
  for (std::size_t d = 0; d < e.dof(); ++d) {
    const auto& j = e.dof_spec(d);
    const double m = margin * (j.upper - j.lower);
    q[d] = rng.uniform(j.lower + m, j.upper - m);
  }
  return q;
}

WorldFuncRep random_rep(Rng& rng, std::size_t n, double spread) {
  WorldFuncRep x;
  x.points.resize(3, static_cast<Eigen::Index>(n));
  x.directions.resize(3, static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
    x.points.col(i) = Vec3(rng.uniform(-spread, spread), rng.uniform(-spread, spread), rng.uniform(-spread, spread));
    Vec3 d(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    while (d.norm() < 0.1) d = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    x.directions.col(i) = d.normalized();
  }
  return x;
}

std::vector<JointConfiguration> keyframe_trajectory(const std::vector<JointConfiguration>& keyframes,
                                                    std::size_t length) {
  std::vector<JointConfiguration> out;
  if (keyframes.size() == 1 || length == 1) {
    out.assign(length, keyframes.front());
    return out;
  }
  const double segments = static_cast<double>(keyframes.size() - 1);
  for (std::size_t t = 0; t < length; ++t) {
    const double s = segments * static_cast<double>(t) / static_cast<double>(length - 1);
    const std::size_t k = std::min(static_cast<std::size_t>(s), keyframes.size() - 2);
    const double u = s - static_cast<double>(k);
    const double w = u * u * (3.0 - 2.0 * u);
    out.emplace_back(keyframes[k].values + w * (keyframes[k + 1].values - keyframes[k].values));
  }
  return out;
}

Demonstration make_demo(const Embodiment& e, const DemoSpec& spec) {
  const auto qs = keyframe_trajectory(spec.keyframes, spec.length);
  Rng rng(spec.seed);
  const RobotSurfaceSampler sampler(e);
  Demonstration demo;
  demo.id = spec.id;
  demo.embodiment = e.name;
  demo.seed = spec.seed;
  demo.initial_state = {{"object_center", {spec.object_center.x(), spec.object_center.y(), spec.object_center.z()}}};
  for (std::size_t t = 0; t < spec.length; ++t) {
    std::vector<Vec3> pts;
    for (std::size_t i = 0; i < spec.table_points; ++i) {
      pts.emplace_back(rng.uniform(0.1, 0.8), rng.uniform(-0.4, 0.4), 0.0);
    }
    const double h = spec.object_half;
    for (std::size_t i = 0; i < spec.object_points; ++i) {
      Vec3 local(rng.uniform(-h, h), rng.uniform(-h, h), rng.uniform(-h, h));
      const int axis = static_cast<int>(rng.index(3));
      local[axis] = rng.uniform() < 0.5 ? -h : h;
      pts.push_back(spec.object_center + local);
    }
    for (std::size_t i = 0; i < spec.outlier_points; ++i) {
      pts.emplace_back(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0), rng.uniform(-0.5, -0.1));
    }
    const PointCloud robot = sampler.sample(qs[t], spec.robot_points, combine_seed(spec.seed, t));
    pts.insert(pts.end(), robot.points.begin(), robot.points.end());

    DemoFrame f;
    f.observation.cloud = PointCloud::scene(std::move(pts));
    std::tie(f.observation.arm, f.observation.ee) = split_configuration(e, qs[t]);
    std::tie(f.action.arm, f.action.ee) = split_configuration(e, qs[std::min(t + 1, spec.length - 1)]);
    demo.frames.push_back(std::move(f));
  }
  return demo;
}

Demonstration arm6_pinch_demo(const Embodiment& gripper, const std::string& id, std::size_t length,
                              std::uint64_t variant) {
  Rng rng(combine_seed(0xA6, variant));
  auto config = [&](std::initializer_list<double> v) {
    Eigen::VectorXd q(static_cast<Eigen::Index>(v.size()));
    std::size_t k = 0;
    for (double x : v) q[static_cast<Eigen::Index>(k++)] = x;
    for (Eigen::Index k2 = 0; k2 < 6; ++k2) q[k2] += rng.uniform(-0.08, 0.08);
    return JointConfiguration(q);
  };
  // Pre-grasp, grasp (open), grasp (closed), lift.
  JointConfiguration pre = config({0.0, 0.5, 1.2, 0.0, 1.0, 0.0, 0.0});
  JointConfiguration grasp = config({0.0, 0.75, 1.15, 0.0, 1.0, 0.0, 0.0});
  JointConfiguration closed = grasp;
  closed[6] = 0.04;
  JointConfiguration lift = pre;
  lift[6] = 0.04;

  const LinkPoseSet poses = forward_kinematics(gripper, closed);
  const Vec3 a = poses.links[gripper.link_index("fixed_pad")].translation;
  const Vec3 b = poses.links[gripper.link_index("moving_pad")].translation;
  DemoSpec spec;
  spec.id = id;
  spec.length = length;
  spec.keyframes = {pre, grasp, closed, closed, lift};
  spec.seed = combine_seed(0xDE30, variant);
  spec.object_center = 0.5 * (a + b);
  spec.object_half = 0.01;
  return make_demo(gripper, spec);
}

void write_dataset(const fs::path& root, const std::vector<Demonstration>& demos) {
  DatasetIndex index;
  for (const auto& d : demos) {
    const std::string checksum = write_demonstration(d, root / d.id);
    index.demos.push_back({d.id, d.id, d.embodiment, d.size(), checksum});
  }
  write_index(index, root);
}

}  // namespace cei::testing
