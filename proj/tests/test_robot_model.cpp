#include <doctest.h>

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>

#include "cei/errors.hpp"
#include "cei/log.hpp"
#include "cei/mesh_io.hpp"
#include "cei/robot_model.hpp"
#include "support.hpp"

using namespace cei;
using namespace cei::testing;

namespace {

std::string two_link_urdf(const std::string& joint2_limits = R"(<limit lower="-3.14159" upper="3.14159"/>)",
                          const std::string& extra = "") {
  return R"(<?xml version="1.0"?>
<robot name="two">
  <link name="base"><visual><geometry><box size="0.1 0.1 0.1"/></geometry></visual></link>
  <link name="a"><visual><geometry><box size="0.2 0.02 0.02"/></geometry></visual></link>
  <link name="b"/>
  <joint name="j1" type="revolute">
    <parent link="base"/><child link="a"/>
    <axis xyz="0 0 1"/>
    <limit lower="-1" upper="1"/>
  </joint>
  <joint name="j2" type="revolute">
    <parent link="a"/><child link="b"/>
    <origin xyz="0.2 0 0"/>
    <axis xyz="0 0 1"/>
    )" + joint2_limits + R"(
  </joint>
)" + extra + "</robot>\n";
}

std::size_t tree_depth(const Embodiment& e) {
  std::function<std::size_t(std::size_t)> depth = [&](std::size_t link) -> std::size_t {
    std::size_t best = 0;
    for (std::size_t j = 0; j < e.joints.size(); ++j) {
      if (static_cast<std::size_t>(e.joint_parent_link[j]) == link) {
        best = std::max(best, 1 + depth(static_cast<std::size_t>(e.joint_child_link[j])));
      }
    }
    return best;
  };
  return depth(0);
}

std::vector<std::string> codes(const std::vector<Diagnostic>& diags) {
  std::vector<std::string> out;
  for (const auto& d : diags) out.push_back(d.code);
  return out;
}

}  // namespace

TEST_CASE("planar two-link fixture") {
  const Embodiment e = load_fixture("planar_2link");
  CHECK(e.dof() == 2);
  CHECK(tree_depth(e) == 2);
  CHECK(e.joints[0].lower == doctest::Approx(-std::numbers::pi));
  CHECK(e.joints[1].upper == doctest::Approx(std::numbers::pi));
  CHECK(validate_embodiment(e).empty());
  CHECK(e.arm_indices == std::vector<std::size_t>{0, 1});
  CHECK(e.ee_indices.empty());
}

TEST_CASE("lower limit above upper is rejected") {
  CHECK_THROWS_AS(parse_robot_description(two_link_urdf(R"(<limit lower="1.0" upper="0.5"/>)"),
                                          DescriptionFormat::urdf_subset),
                  ValidationError);
}

TEST_CASE("missing limits on a non-fixed joint are rejected") {
  CHECK_THROWS_AS(parse_robot_description(two_link_urdf(""), DescriptionFormat::urdf_subset), ValidationError);
}

TEST_CASE("7-dof arm with 12-dof hand") {
  const Embodiment e = load_fixture("arm7_hand12");
  CHECK(e.dof() == 19);
  std::vector<std::size_t> arm, ee;
  for (std::size_t k = 0; k < 7; ++k) arm.push_back(k);
  for (std::size_t k = 7; k < 19; ++k) ee.push_back(k);
  CHECK(e.arm_indices == arm);
  CHECK(e.ee_indices == ee);
  CHECK(validate_embodiment(e).empty());
}

TEST_CASE("malformed XML reports the line") {
  const std::string doc = "<?xml version=\"1.0\"?>\n<robot name=\"x\">\n  <link name=\"a\">\n</robot>\n";
  try {
    parse_robot_description(doc, DescriptionFormat::urdf_subset);
    FAIL("expected a parse error");
  } catch (const ParseError& err) {
    CHECK(std::string(err.what()).find("line") != std::string::npos);
  }
}

TEST_CASE("cycles and multiple roots are structure errors") {
  const std::string cycle = R"(<robot name="c">
  <link name="a"/><link name="b"/>
  <joint name="j1" type="fixed"><parent link="a"/><child link="b"/></joint>
  <joint name="j2" type="fixed"><parent link="b"/><child link="a"/></joint>
</robot>)";
  CHECK_THROWS_AS(parse_robot_description(cycle, DescriptionFormat::urdf_subset), StructureError);
  const std::string forest = R"(<robot name="f"><link name="a"/><link name="b"/></robot>)";
  CHECK_THROWS_AS(parse_robot_description(forest, DescriptionFormat::urdf_subset), StructureError);
  const std::string dangling = R"(<robot name="d">
  <link name="a"/>
  <joint name="j" type="fixed"><parent link="a"/><child link="zz"/></joint>
</robot>)";
  CHECK_THROWS_AS(parse_robot_description(dangling, DescriptionFormat::urdf_subset), StructureError);
}

TEST_CASE("unsupported elements are skipped with a warning") {
  ScopedWarningCapture capture;
  const std::string extra = R"(  <transmission name="t"><type>simple</type></transmission>
)";
  const Embodiment e = parse_robot_description(two_link_urdf(R"(<limit lower="-1" upper="1"/><dynamics damping="0.1"/>)", extra),
                                               DescriptionFormat::urdf_subset);
  CHECK(e.dof() == 2);
  CHECK(capture.messages().size() == 2);
}

TEST_CASE("unsupported joint types are parse errors") {
  const std::string doc = R"(<robot name="x"><link name="a"/><link name="b"/>
  <joint name="j" type="continuous"><parent link="a"/><child link="b"/><axis xyz="0 0 1"/></joint></robot>)";
  CHECK_THROWS_AS(parse_robot_description(doc, DescriptionFormat::urdf_subset), ParseError);
}

TEST_CASE("joint order is depth-first in declaration order") {
  const std::string doc = R"(<robot name="t">
  <link name="root"/><link name="l1"/><link name="l2"/><link name="l1a"/>
  <joint name="to_l2" type="revolute"><parent link="root"/><child link="l2"/><axis xyz="0 0 1"/><limit lower="-1" upper="1"/></joint>
  <joint name="to_l1a" type="prismatic"><parent link="l1"/><child link="l1a"/><axis xyz="1 0 0"/><limit lower="0" upper="1"/></joint>
  <joint name="to_l1" type="revolute"><parent link="root"/><child link="l1"/><axis xyz="0 1 0"/><limit lower="-1" upper="1"/></joint>
</robot>)";
  const Embodiment e = parse_robot_description(doc, DescriptionFormat::urdf_subset);
  REQUIRE(e.dof() == 3);
  CHECK(e.dof_spec(0).name == "to_l2");
  CHECK(e.dof_spec(1).name == "to_l1");
  CHECK(e.dof_spec(2).name == "to_l1a");
  CHECK(e.links[0].name == "root");
}

TEST_CASE("validate_embodiment names the violated invariant") {
  const Embodiment good = load_fixture("planar_2link");
  CHECK(validate_embodiment(good).empty());

  Embodiment bad_axis = good;
  bad_axis.joints[0].axis = Vec3(0, 0, 0.9);
  CHECK(codes(validate_embodiment(bad_axis)) == std::vector<std::string>{"non-unit axis"});

  Embodiment dup = good;
  dup.links[2].name = dup.links[1].name;
  CHECK(codes(validate_embodiment(dup)) == std::vector<std::string>{"duplicate identifier"});

  Embodiment limits = good;
  limits.joints[1].lower = 2.0;
  limits.joints[1].upper = 1.0;
  CHECK(codes(validate_embodiment(limits)) == std::vector<std::string>{"invalid limits"});

  Embodiment box = good;
  std::get<BoxPrimitive>(box.links[0].geometry->shape).half_extents.x() = 0.0;
  CHECK(codes(validate_embodiment(box)) == std::vector<std::string>{"non-positive half extent"});

  Embodiment overlap = good;
  overlap.ee_indices = {1};
  CHECK(codes(validate_embodiment(overlap)) == std::vector<std::string>{"partition overlap"});
}

TEST_CASE("mesh diagnostics") {
  Embodiment e = load_fixture("parallel_gripper");
  const std::size_t pad = e.link_index("fixed_pad");
  auto& mesh = std::get<TriangleMesh>(e.links[pad].geometry->shape);
  Embodiment out_of_range = e;
  std::get<TriangleMesh>(out_of_range.links[pad].geometry->shape).faces[0][1] = 99;
  CHECK(codes(validate_embodiment(out_of_range)) == std::vector<std::string>{"face index out of range"});
  mesh.faces.clear();
  CHECK(codes(validate_embodiment(e)) == std::vector<std::string>{"empty mesh"});
}

TEST_CASE("parsing is deterministic and native round-trips") {
  for (const char* stem : {"planar_2link", "arm7_hand12", "parallel_gripper", "three_finger_hand", "arm6_hand"}) {
    const Embodiment a = load_fixture(stem);
    const Embodiment b = load_fixture(stem);
    CHECK(serialize_embodiment(a) == serialize_embodiment(b));
    const std::string text = serialize_embodiment(a);
    const Embodiment c = parse_robot_description(text, DescriptionFormat::native);
    CHECK(c == a);
    CHECK(serialize_embodiment(c) == text);
  }
}

TEST_CASE("manifest partition rules") {
  Embodiment e = load_fixture("arm6_gripper");
  CHECK(e.arm_indices.size() == 6);
  CHECK(e.ee_indices == std::vector<std::size_t>{6});

  EmbodimentManifest only_ee;
  only_ee.ee_joints = {"slide"};
  Embodiment e2 = load_fixture("arm6_gripper");
  apply_manifest(e2, only_ee);
  CHECK(e2.arm_indices == e.arm_indices);

  EmbodimentManifest overlap;
  overlap.arm_joints = {"slide"};
  overlap.ee_joints = {"slide"};
  CHECK_THROWS_AS(apply_manifest(e2, overlap), ValidationError);

  EmbodimentManifest unknown;
  unknown.ee_joints = {"nope"};
  CHECK_THROWS_AS(apply_manifest(e2, unknown), ValidationError);

  EmbodimentManifest moved;
  moved.base.xyz = Vec3(0, 0, 0.5);
  apply_manifest(e2, moved);
  CHECK(e2.base.translation.z() == 0.5);
}

TEST_CASE("configuration helpers") {
  const Embodiment e = load_fixture("arm6_gripper");
  const JointConfiguration mid = mid_range_configuration(e);
  CHECK(mid[6] == doctest::Approx(0.025));
  auto [arm, ee] = split_configuration(e, mid);
  CHECK(arm.size() == 6);
  CHECK(ee.size() == 1);
  CHECK(join_configuration(e, arm, ee) == mid);
  CHECK_THROWS_AS(check_configuration(e, JointConfiguration::zeros(3)), DimensionError);
  JointConfiguration nan = mid;
  nan[0] = NAN;
  CHECK_THROWS(check_configuration(e, nan));
  JointConfiguration wild = mid;
  wild[6] = 1.0;
  wild[0] = -10.0;
  const JointConfiguration clamped = clamp_to_limits(e, wild);
  CHECK(clamped[6] == 0.05);
  CHECK(clamped[0] == -2.9);
}

TEST_CASE("OBJ pad mesh loads with an outward +y normal") {
  const TriangleMesh mesh = load_mesh(fixture("pad.obj"));
  CHECK(mesh.vertices.size() == 4);
  CHECK(mesh.faces.size() == 2);
  const auto tri = triangulate_geometry(LinkGeometry{mesh, Origin{}});
  for (const auto& n : tri.normals) CHECK((n - Vec3::UnitY()).norm() < 1e-12);
  CHECK(tri.total_area == doctest::Approx(0.0004));
}

TEST_CASE("STL ascii and binary load to the same mesh") {
  const auto dir = scratch_dir("stl");
  const std::string ascii = "solid t\nfacet normal 0 0 1\nouter loop\nvertex 0 0 0\nvertex 1 0 0\nvertex 0 1 0\n"
                            "endloop\nendfacet\nfacet normal 0 0 1\nouter loop\nvertex 1 0 0\nvertex 1 1 0\nvertex 0 1 0\n"
                            "endloop\nendfacet\nendsolid t\n";
  std::ofstream(dir / "a.stl") << ascii;
  std::string binary(80, '\0');
  auto put = [&](const void* p, std::size_t n) { binary.append(static_cast<const char*>(p), n); };
  const std::uint32_t count = 2;
  put(&count, 4);
  const float tris[2][12] = {{0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1, 0}, {0, 0, 1, 1, 0, 0, 1, 1, 0, 0, 1, 0}};
  for (const auto& t : tris) {
    put(t, 48);
    binary.append(2, '\0');
  }
  std::ofstream(dir / "b.stl", std::ios::binary) << binary;
  const TriangleMesh a = load_mesh(dir / "a.stl");
  const TriangleMesh b = load_mesh(dir / "b.stl");
  CHECK(a == b);
  CHECK(a.vertices.size() == 4);
  CHECK(load_mesh(dir / "a.stl", 2.0).vertices[1].x() == 2.0);
}

TEST_CASE("box sampling is stratified over faces") {
  std::vector<LinkSpec> links(1);
  links[0].name = "cube";
  links[0].geometry = LinkGeometry{BoxPrimitive{Vec3(0.5, 0.5, 0.5)}, Origin{}};
  const Embodiment e = assemble_embodiment("cube", links, {});
  const auto samples = sample_link_surface(e, "cube", 6 * 50, 11);
  REQUIRE(samples.size() == 300);
  std::map<std::tuple<int, int, int>, int> per_normal;
  for (const auto& s : samples) {
    const Vec3 n = s.normal;
    CHECK(std::abs(n.cwiseAbs().maxCoeff() - 1.0) < 1e-15);
    CHECK(n.cwiseAbs().sum() == doctest::Approx(1.0));
    CHECK(std::abs(s.point.dot(n) - 0.5) < 1e-12);
    CHECK(s.point.cwiseAbs().maxCoeff() <= 0.5 + 1e-12);
    per_normal[{int(n.x()), int(n.y()), int(n.z())}]++;
  }
  CHECK(per_normal.size() == 6);
  for (const auto& [k, v] : per_normal) CHECK(v == 50);
}

TEST_CASE("single-triangle sampling stays in the triangle") {
  std::vector<LinkSpec> links(1);
  links[0].name = "tri";
  TriangleMesh m;
  m.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 2, 0)};
  m.faces = {{0, 1, 2}};
  links[0].geometry = LinkGeometry{m, Origin{}};
  const Embodiment e = assemble_embodiment("tri", links, {});
  const auto samples = sample_link_surface(e, "tri", 10, 5);
  REQUIRE(samples.size() == 10);
  for (const auto& s : samples) {
    // Barycentric coordinates from the 2D layout.
    const double b1 = s.point.x();
    const double b2 = s.point.y() / 2.0;
    const double b0 = 1.0 - b1 - b2;
    CHECK(b0 >= -1e-12);
    CHECK(b1 >= -1e-12);
    CHECK(b2 >= -1e-12);
    CHECK(std::abs(b0 + b1 + b2 - 1.0) < 1e-12);
    CHECK(std::abs(s.point.z()) < 1e-12);
  }
}

TEST_CASE("area-weighted sampling within 3 sigma of 9:1") {
  std::vector<LinkSpec> links(1);
  links[0].name = "pair";
  TriangleMesh m;
  // Areas 4.5 and 0.5.
  m.vertices = {Vec3(0, 0, 0), Vec3(3, 0, 0), Vec3(0, 3, 0), Vec3(5, 0, 0), Vec3(6, 0, 0), Vec3(5, 1, 0)};
  m.faces = {{0, 1, 2}, {3, 4, 5}};
  links[0].geometry = LinkGeometry{m, Origin{}};
  const Embodiment e = assemble_embodiment("pair", links, {});
  const auto samples = sample_link_surface(e, "pair", 10000, 0);
  std::size_t first = 0;
  for (const auto& s : samples) first += s.face == 0 ? 1 : 0;
  const double sigma = std::sqrt(10000 * 0.9 * 0.1);
  CHECK(std::abs(static_cast<double>(first) - 9000.0) <= 3 * sigma);
}

TEST_CASE("mesh samples lie on their face (property)") {
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    TriangleMesh m;
    const std::size_t faces = 1 + rng.index(6);
    for (std::size_t f = 0; f < faces; ++f) {
      for (int c = 0; c < 3; ++c) m.vertices.emplace_back(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
      m.faces.push_back({int(3 * f), int(3 * f + 1), int(3 * f + 2)});
    }
    std::vector<LinkSpec> links(1);
    links[0].name = "m";
    links[0].geometry = LinkGeometry{m, Origin{Vec3(0.1, 0.2, 0.3), Vec3(0.4, -0.2, 1.0)}};
    const Embodiment e = assemble_embodiment("m", links, {});
    const Pose place = links[0].geometry->origin.pose();
    for (const auto& s : sample_link_surface(e, "m", 200, trial)) {
      const auto& f = m.faces[s.face];
      const Vec3 a = place.apply(m.vertices[f[0]]), b = place.apply(m.vertices[f[1]]), c = place.apply(m.vertices[f[2]]);
      const Vec3 n = (b - a).cross(c - a).normalized();
      CHECK(std::abs((s.point - a).dot(n)) <= 1e-9);
      CHECK(std::abs(std::abs(s.normal.dot(n)) - 1.0) < 1e-12);
      // Inside: all sub-triangle orientations agree.
      const double s1 = (b - a).cross(s.point - a).dot(n);
      const double s2 = (c - b).cross(s.point - b).dot(n);
      const double s3 = (a - c).cross(s.point - c).dot(n);
      CHECK(s1 >= -1e-12);
      CHECK(s2 >= -1e-12);
      CHECK(s3 >= -1e-12);
    }
  }
}

TEST_CASE("closed mesh normals point away from the center") {
  // Tetrahedron wound inward throughout; the majority vote flips it.
  TriangleMesh m;
  m.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)};
  m.faces = {{0, 1, 2}, {0, 3, 1}, {0, 2, 3}, {1, 3, 2}};
  std::vector<LinkSpec> links(1);
  links[0].name = "tet";
  links[0].geometry = LinkGeometry{m, Origin{}};
  const Embodiment e = assemble_embodiment("tet", links, {});
  const Vec3 center(0.25, 0.25, 0.25);
  for (const auto& s : sample_link_surface(e, "tet", 400, 1)) CHECK(s.normal.dot(s.point - center) > 0.0);
}

TEST_CASE("box normals point away from an offset box center") {
  const Embodiment e = load_fixture("arm6_gripper");
  const auto& g = *e.links[e.link_index("link2")].geometry;
  const Vec3 center = g.origin.xyz;
  for (const auto& s : sample_link_surface(e, "link2", 120, 4)) CHECK(s.normal.dot(s.point - center) > 0.0);
}

TEST_CASE("sampling a link without geometry is an error") {
  const Embodiment e = load_fixture("parallel_gripper");
  CHECK_THROWS_AS(sample_link_surface(e, "mount", 10, 0), ValidationError);
  CHECK_THROWS(sample_link_surface(e, "no_such_link", 10, 0));
}

TEST_CASE("sampling is deterministic per seed") {
  const Embodiment e = load_fixture("three_finger_hand");
  CHECK(sample_link_surface(e, "thumb_pad", 64, 3) == sample_link_surface(e, "thumb_pad", 64, 3));
  CHECK_FALSE(sample_link_surface(e, "thumb_pad", 64, 3) == sample_link_surface(e, "thumb_pad", 64, 4));
}
