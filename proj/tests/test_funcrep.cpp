#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cei/errors.hpp"
#include "cei/funcrep.hpp"
#include "support.hpp"

using namespace cei;
using namespace cei::testing;

namespace {

bool contains_entry(const FunctionalTemplate& tmpl, const AttachedPoint& a) {
  return std::find(tmpl.entries.begin(), tmpl.entries.end(), a) != tmpl.entries.end();
}

Embodiment with_base(Embodiment e, const Pose& base) {
  e.base = base;
  return e;
}

}  // namespace

TEST_CASE("template sizes per variant") {
  const Embodiment e = load_fixture("parallel_gripper");
  const std::vector<std::string> pads{"fixed_pad", "moving_pad"};
  const auto standard = build_template(e, pads, 32, 7);
  CHECK(standard.size() == 64);
  for (const auto& a : standard.entries) CHECK(std::abs(a.normal.norm() - 1.0) < 1e-9);

  TemplateOptions dropped;
  dropped.variant = TemplateVariant::random_dropped;
  dropped.drop_fraction = 0.5;
  const auto half = build_template(e, pads, 32, 7, dropped);
  CHECK(half.size() == 32);
  for (const auto& a : half.entries) CHECK(contains_entry(standard, a));
  CHECK(build_template(e, pads, 32, 7, dropped).entries == half.entries);

  TemplateOptions wide;
  wide.variant = TemplateVariant::reduced;
  wide.reduced_radius = 10.0;
  CHECK(build_template(e, pads, 32, 7, wide).entries == standard.entries);

  TemplateOptions narrow;
  narrow.variant = TemplateVariant::reduced;
  narrow.reduced_radius = 0.006;
  const auto reduced = build_template(e, pads, 32, 7, narrow);
  CHECK(reduced.size() < standard.size());
  for (const auto& a : reduced.entries) CHECK(contains_entry(standard, a));
}

TEST_CASE("template sampling is deterministic per seed") {
  const Embodiment e = load_fixture("three_finger_hand");
  const std::vector<std::string> pads{"thumb_pad", "finger1_pad", "finger2_pad"};
  CHECK(build_template(e, pads, 16, 3).entries == build_template(e, pads, 16, 3).entries);
  CHECK(build_template(e, pads, 16, 3).entries != build_template(e, pads, 16, 4).entries);
}

TEST_CASE("template errors") {
  const Embodiment e = load_fixture("parallel_gripper");
  CHECK_THROWS_AS(build_template(e, {}, 8, 0), ValidationError);
  CHECK_THROWS_AS(build_template(e, {"no_such_link"}, 8, 0), ValidationError);
  CHECK_THROWS_AS(build_template(e, {"mount"}, 8, 0), Error);
  CHECK_THROWS_AS(template_trajectory(e, build_template(e, {"fixed_pad"}, 8, 0), {}), ValidationError);
}

TEST_CASE("root-link origin evaluates to the world origin") {
  const Embodiment e = load_fixture("planar_2link");
  FunctionalTemplate tmpl;
  tmpl.entries.push_back({e.link_index("base"), Vec3::Zero(), Vec3::UnitZ()});
  const WorldFuncRep w = eval_template(e, tmpl, JointConfiguration::zeros(2));
  CHECK(w.points.col(0).norm() == 0.0);
  CHECK(w.directions.col(0) == Vec3::UnitZ());
}

TEST_CASE("base rotation by pi about z negates x and y") {
  const Embodiment e = load_fixture("three_finger_hand");
  const auto tmpl = build_template(e, {"thumb_pad", "finger1_pad", "finger2_pad"}, 16, 1);
  Rng rng(5);
  const JointConfiguration q = random_configuration(rng, e);
  const WorldFuncRep plain = eval_template(e, tmpl, q);
  const Embodiment turned = with_base(e, Pose{axis_angle_rotation(Vec3::UnitZ(), std::numbers::pi), Vec3::Zero()});
  const WorldFuncRep rotated = eval_template(turned, tmpl, q);
  const Eigen::Vector3d flip(-1, -1, 1);
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    const auto c = static_cast<Eigen::Index>(i);
    CHECK((rotated.points.col(c) - flip.cwiseProduct(plain.points.col(c))).norm() < 1e-12);
    CHECK((rotated.directions.col(c) - flip.cwiseProduct(plain.directions.col(c))).norm() < 1e-12);
  }
}

TEST_CASE("rigid base transforms commute with evaluation") {
  Rng rng(6);
  for (int trial = 0; trial < 25; ++trial) {
    const Embodiment e = random_embodiment(rng, 2 + rng.index(6));
    const auto tmpl = build_template(e, {e.links.back().name, e.links.front().name}, 8, trial);
    const JointConfiguration q = random_configuration(rng, e);
    const Vec3 axis = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)).normalized();
    const Pose g{axis_angle_rotation(axis, rng.uniform(-3, 3)), Vec3(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2))};
    const WorldFuncRep before = eval_template(e, tmpl, q);
    const WorldFuncRep after = eval_template(with_base(e, g * e.base), tmpl, q);
    for (Eigen::Index c = 0; c < before.points.cols(); ++c) {
      CHECK((after.points.col(c) - g.apply(before.points.col(c))).norm() < 1e-9);
      CHECK((after.directions.col(c) - g.rotate(before.directions.col(c))).norm() < 1e-9);
      CHECK(std::abs(after.directions.col(c).norm() - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("evaluation matches the homogeneous-matrix oracle") {
  Rng rng(7);
  for (int trial = 0; trial < 25; ++trial) {
    const Embodiment e = random_embodiment(rng, 1 + rng.index(7));
    std::vector<std::string> pads;
    for (const auto& link : e.links) pads.push_back(link.name);
    const auto tmpl = build_template(e, pads, 4, trial);
    const JointConfiguration q = random_configuration(rng, e);
    const auto transforms = oracle_link_transforms(e, q);
    const WorldFuncRep w = eval_template(e, tmpl, q);
    for (std::size_t i = 0; i < tmpl.size(); ++i) {
      const auto& a = tmpl.entries[i];
      const auto it = std::find_if(transforms.begin(), transforms.end(),
                                   [&](const auto& kv) { return kv.first == e.links[a.link].name; });
      REQUIRE(it != transforms.end());
      const Eigen::Vector4d p = it->second * a.point.homogeneous();
      const Eigen::Vector4d n = it->second * Eigen::Vector4d(a.normal.x(), a.normal.y(), a.normal.z(), 0.0);
      const auto c = static_cast<Eigen::Index>(i);
      CHECK((w.points.col(c) - p.head<3>()).norm() < 1e-12);
      CHECK((w.directions.col(c) - n.head<3>()).norm() < 1e-12);
    }
  }
}

TEST_CASE("trajectory frames equal per-frame evaluation") {
  const Embodiment e = load_fixture("arm6_gripper");
  const auto tmpl = build_template(e, fixture_manifest("arm6_gripper").pad_links, 16, 2);
  Rng rng(8);

  const JointConfiguration q = random_configuration(rng, e);
  const auto constant = template_trajectory(e, tmpl, std::vector<JointConfiguration>(5, q));
  REQUIRE(constant.size() == 5);
  for (const auto& f : constant.frames) CHECK(f == constant.frames[0]);

  const auto single = template_trajectory(e, tmpl, {q});
  REQUIRE(single.size() == 1);
  CHECK(single.frames[0] == eval_template(e, tmpl, q));

  const Demonstration demo = arm6_pinch_demo(e, "pinch", 12, 0);
  std::vector<JointConfiguration> traj;
  for (const auto& frame : demo.frames) traj.push_back(observed_configuration(e, frame));
  for (unsigned workers : {1u, 3u}) {
    const auto frames = template_trajectory(e, tmpl, traj, workers);
    REQUIRE(frames.size() == traj.size());
    for (std::size_t t = 0; t < traj.size(); ++t) CHECK(frames.frames[t] == eval_template(e, tmpl, traj[t]));
  }
}

TEST_CASE("template json round trip") {
  const Embodiment e = load_fixture("three_finger_hand");
  TemplateOptions opts;
  opts.variant = TemplateVariant::random_dropped;
  const auto tmpl = build_template(e, {"thumb_pad", "finger1_pad"}, 10, 11, opts);
  const nlohmann::json doc = nlohmann::json::parse(template_to_json(e, tmpl).dump());
  const auto back = template_from_json(e, doc);
  CHECK(back.entries == tmpl.entries);
  CHECK(back.source.pad_links == tmpl.source.pad_links);
  CHECK(back.source.options.variant == TemplateVariant::random_dropped);
  CHECK(to_string(template_variant_from_string("reduced")) == "reduced");
  CHECK_THROWS_AS(template_variant_from_string("huge"), ValidationError);

  nlohmann::json bad = doc;
  bad["entries"][0]["link"] = "elsewhere";
  CHECK_THROWS_AS(template_from_json(e, bad), ValidationError);
}
