#include "cei/spatial_aug.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Geometry>

#include "cei/errors.hpp"

namespace cei {

void validate(const SpatialTransform& t) {
  if (!t.rotation.allFinite() || !t.translation.allFinite()) throw ValidationError("transform is not finite");
  if (orthonormality_error(t.rotation) > 1e-9) throw ValidationError("transform rotation is not orthonormal");
}

double clipped_growth(std::size_t t, std::size_t length, double knee) {
  if (length == 0) throw ValidationError("trajectory length must be positive");
  if (!(knee > 0.0 && knee <= 1.0)) throw ValidationError("growth knee must lie in (0, 1]");
  if (t >= length) throw ValidationError("frame index beyond trajectory length");
  return std::min(static_cast<double>(t) / (knee * static_cast<double>(length)), 1.0);
}

FuncRepTrajectory augment_rep_trajectory(const FuncRepTrajectory& traj, const SpatialTransform& transform,
                                         const AugmentationSchedule& schedule) {
  if (traj.frames.empty()) throw ValidationError("cannot augment an empty trajectory");
  validate(transform);
  FuncRepTrajectory out;
  out.frames.reserve(traj.size());
  for (std::size_t t = 0; t < traj.size(); ++t) {
    const WorldFuncRep& x = traj.frames[t];
    const double g = clipped_growth(t, traj.size(), schedule.knee);
    if (g == 0.0) {
      out.frames.push_back(x);
      continue;
    }
    WorldFuncRep moved;
    moved.points = (transform.rotation * x.points).colwise() + transform.translation;
    moved.directions = transform.rotation * x.directions;
    if (g == 1.0) {
      out.frames.push_back(std::move(moved));
      continue;
    }
    WorldFuncRep blended;
    blended.points = x.points + g * (moved.points - x.points);
    blended.directions = x.directions + g * (moved.directions - x.directions);
    for (Eigen::Index i = 0; i < blended.directions.cols(); ++i) {
      const double norm = blended.directions.col(i).norm();
      if (!(norm > 1e-9)) {
        throw NumericalError("frame " + std::to_string(t) + ": blended direction " + std::to_string(i) +
                             " vanishes");
      }
      blended.directions.col(i) /= norm;
    }
    out.frames.push_back(std::move(blended));
  }
  return out;
}

std::vector<GridTransform> grid_transforms(std::span<const Vec3> anchors, std::size_t n, double range) {
  if (n < 1) throw ValidationError("grid size must be >= 1");
  if (!(range > 0.0)) throw ValidationError("grid range must be positive");
  auto offset = [&](std::size_t k) {
    if (n == 1) return 0.0;
    if (k == n - 1) return range;
    return -range + 2.0 * range * static_cast<double>(k) / static_cast<double>(n - 1);
  };
  std::vector<GridTransform> out;
  out.reserve(anchors.size() * n * n);
  for (std::size_t a = 0; a < anchors.size(); ++a) {
    for (std::size_t gx = 0; gx < n; ++gx) {
      for (std::size_t gy = 0; gy < n; ++gy) {
        GridTransform g;
        g.transform.translation = anchors[a] + Vec3(offset(gx), offset(gy), 0.0);
        g.anchor = a;
        g.gx = gx;
        g.gy = gy;
        out.push_back(g);
      }
    }
  }
  return out;
}

PointCloud augment_scene_cloud(const PointCloud& pc, const std::vector<bool>& object_mask,
                               const SpatialTransform& transform, double g) {
  if (object_mask.size() != pc.size()) {
    throw ValidationError("object mask has " + std::to_string(object_mask.size()) + " entries for " +
                          std::to_string(pc.size()) + " points");
  }
  if (!(g >= 0.0 && g <= 1.0)) throw ValidationError("growth must lie in [0, 1]");
  validate(transform);
  if (g == 0.0) return pc;
  Mat3 rotation = transform.rotation;
  if (g != 1.0) {
    const Eigen::AngleAxisd full(transform.rotation);
    rotation = Eigen::AngleAxisd(g * full.angle(), full.axis()).toRotationMatrix();
  }
  const Vec3 translation = g * transform.translation;
  PointCloud out = pc;
  for (std::size_t i = 0; i < pc.size(); ++i) {
    if (object_mask[i]) out.points[i] = rotation * pc.points[i] + translation;
  }
  return out;
}

nlohmann::json transforms_to_json(std::span<const GridTransform> transforms) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& g : transforms) {
    const Eigen::Quaterniond quat(g.transform.rotation);
    list.push_back({{"rotation_wxyz", {quat.w(), quat.x(), quat.y(), quat.z()}},
                    {"translation", {g.transform.translation.x(), g.transform.translation.y(),
                                     g.transform.translation.z()}},
                    {"anchor", g.anchor},
                    {"grid", {g.gx, g.gy}}});
  }
  return {{"version", 1}, {"transforms", list}};
}

std::vector<GridTransform> transforms_from_json(const nlohmann::json& doc) {
  std::vector<GridTransform> out;
  try {
    for (const auto& item : doc.at("transforms")) {
      GridTransform g;
      const auto& r = item.at("rotation_wxyz");
      const auto& t = item.at("translation");
      g.transform.rotation = Eigen::Quaterniond(r.at(0).get<double>(), r.at(1).get<double>(), r.at(2).get<double>(),
                                                r.at(3).get<double>())
                                 .normalized()
                                 .toRotationMatrix();
      g.transform.translation = Vec3(t.at(0).get<double>(), t.at(1).get<double>(), t.at(2).get<double>());
      g.anchor = item.at("anchor").get<std::size_t>();
      g.gx = item.at("grid").at(0).get<std::size_t>();
      g.gy = item.at("grid").at(1).get<std::size_t>();
      out.push_back(g);
    }
  } catch (const nlohmann::json::exception& err) {
    throw ParseError(std::string("transform list: ") + err.what());
  }
  return out;
}

}  // namespace cei
