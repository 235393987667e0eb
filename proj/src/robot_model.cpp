#include "cei/robot_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <nlohmann/json.hpp>

#include "cei/errors.hpp"
#include "cei/log.hpp"
#include "cei/mesh_io.hpp"
#include "cei/random.hpp"

namespace cei {

using nlohmann::json;
using nlohmann::ordered_json;
namespace pt = boost::property_tree;

std::string_view to_string(JointKind kind) {
  switch (kind) {
    case JointKind::revolute: return "revolute";
    case JointKind::prismatic: return "prismatic";
    case JointKind::fixed: return "fixed";
  }
  return "fixed";
}

namespace {

std::optional<JointKind> joint_kind_from_string(std::string_view s) {
  if (s == "revolute") return JointKind::revolute;
  if (s == "prismatic") return JointKind::prismatic;
  if (s == "fixed") return JointKind::fixed;
  return std::nullopt;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// Embodiment lookups and configuration helpers

std::optional<std::size_t> Embodiment::find_link(std::string_view link) const {
  for (std::size_t i = 0; i < links.size(); ++i) {
    if (links[i].name == link) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> Embodiment::find_joint(std::string_view joint) const {
  for (std::size_t i = 0; i < joints.size(); ++i) {
    if (joints[i].name == joint) return i;
  }
  return std::nullopt;
}

std::size_t Embodiment::link_index(std::string_view link) const {
  if (auto idx = find_link(link)) return *idx;
  throw ValidationError("embodiment '" + name + "' has no link '" + std::string(link) + "'");
}

void check_configuration(const Embodiment& e, const JointConfiguration& q) {
  if (q.size() != e.dof()) {
    throw DimensionError("configuration has " + std::to_string(q.size()) + " values, embodiment '" +
                         e.name + "' has dof " + std::to_string(e.dof()));
  }
  if (!q.values.allFinite()) throw DimensionError("configuration has non-finite entries");
}

JointConfiguration mid_range_configuration(const Embodiment& e) {
  JointConfiguration q = JointConfiguration::zeros(e.dof());
  for (std::size_t d = 0; d < e.dof(); ++d) {
    const auto& j = e.dof_spec(d);
    q[d] = 0.5 * (j.lower + j.upper);
  }
  return q;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> split_configuration(const Embodiment& e, const JointConfiguration& q) {
  check_configuration(e, q);
  Eigen::VectorXd arm(static_cast<Eigen::Index>(e.arm_indices.size()));
  Eigen::VectorXd ee(static_cast<Eigen::Index>(e.ee_indices.size()));
  for (std::size_t k = 0; k < e.arm_indices.size(); ++k) arm[static_cast<Eigen::Index>(k)] = q[e.arm_indices[k]];
  for (std::size_t k = 0; k < e.ee_indices.size(); ++k) ee[static_cast<Eigen::Index>(k)] = q[e.ee_indices[k]];
  return {arm, ee};
}

JointConfiguration join_configuration(const Embodiment& e, const Eigen::VectorXd& arm, const Eigen::VectorXd& ee) {
  if (static_cast<std::size_t>(arm.size()) != e.arm_indices.size() ||
      static_cast<std::size_t>(ee.size()) != e.ee_indices.size()) {
    throw DimensionError("arm/ee split " + std::to_string(arm.size()) + "/" + std::to_string(ee.size()) +
                         " does not match embodiment '" + e.name + "' (" + std::to_string(e.arm_indices.size()) +
                         "/" + std::to_string(e.ee_indices.size()) + ")");
  }
  JointConfiguration q = JointConfiguration::zeros(e.dof());
  for (std::size_t k = 0; k < e.arm_indices.size(); ++k) q[e.arm_indices[k]] = arm[static_cast<Eigen::Index>(k)];
  for (std::size_t k = 0; k < e.ee_indices.size(); ++k) q[e.ee_indices[k]] = ee[static_cast<Eigen::Index>(k)];
  return q;
}

JointConfiguration clamp_to_limits(const Embodiment& e, const JointConfiguration& q) {
  check_configuration(e, q);
  JointConfiguration out = q;
  for (std::size_t d = 0; d < e.dof(); ++d) {
    const auto& j = e.dof_spec(d);
    out[d] = std::clamp(q[d], j.lower, j.upper);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Manifest

namespace {

Vec3 vec3_from_json(const json& j, const std::string& context) {
  if (!j.is_array() || j.size() != 3) throw ParseError(context + ": expected an array of 3 numbers");
  Vec3 v;
  for (int i = 0; i < 3; ++i) {
    if (!j[i].is_number()) throw ParseError(context + ": expected an array of 3 numbers");
    v[i] = j[i].get<double>();
  }
  return v;
}

ordered_json vec3_to_json(const Vec3& v) { return ordered_json::array({v.x(), v.y(), v.z()}); }

Origin origin_from_json(const json& j, const std::string& context) {
  Origin o;
  if (j.contains("xyz")) o.xyz = vec3_from_json(j["xyz"], context + ".xyz");
  if (j.contains("rpy")) o.rpy = vec3_from_json(j["rpy"], context + ".rpy");
  return o;
}

ordered_json origin_to_json(const Origin& o) {
  ordered_json j;
  j["xyz"] = vec3_to_json(o.xyz);
  j["rpy"] = vec3_to_json(o.rpy);
  return j;
}

std::vector<std::string> string_list(const json& j, const std::string& context) {
  if (!j.is_array()) throw ParseError(context + ": expected an array of strings");
  std::vector<std::string> out;
  for (const auto& item : j) {
    if (!item.is_string()) throw ParseError(context + ": expected an array of strings");
    out.push_back(item.get<std::string>());
  }
  return out;
}

json parse_json_document(std::string_view text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& err) {
    throw ParseError(what + ": " + err.what());
  }
}

}  // namespace

EmbodimentManifest parse_manifest(std::string_view json_text) {
  const json doc = parse_json_document(json_text, "embodiment manifest");
  if (!doc.is_object()) throw ParseError("embodiment manifest: top level must be an object");
  EmbodimentManifest m;
  try {
    if (doc.contains("arm_joints")) m.arm_joints = string_list(doc["arm_joints"], "arm_joints");
    if (doc.contains("ee_joints")) m.ee_joints = string_list(doc["ee_joints"], "ee_joints");
    if (doc.contains("pad_links")) m.pad_links = string_list(doc["pad_links"], "pad_links");
    if (doc.contains("workspace")) {
      const auto& w = doc["workspace"];
      Aabb box{vec3_from_json(w.at("min"), "workspace.min"), vec3_from_json(w.at("max"), "workspace.max")};
      if (!box.valid()) throw ValidationError("workspace: min must be < max on every axis");
      m.workspace = box;
    }
    if (doc.contains("base")) m.base = origin_from_json(doc["base"], "base");
  } catch (const json::exception& err) {
    throw ParseError(std::string("embodiment manifest: ") + err.what());
  }
  return m;
}

EmbodimentManifest load_manifest(const std::filesystem::path& path) {
  return parse_manifest(read_text_file(path));
}

void apply_manifest(Embodiment& e, const EmbodimentManifest& manifest) {
  auto resolve = [&](const std::vector<std::string>& names, const char* role) {
    std::vector<std::size_t> dofs;
    for (const auto& name : names) {
      auto j = e.find_joint(name);
      if (!j) throw ValidationError(std::string(role) + " joint '" + name + "' not found in '" + e.name + "'");
      if (e.joint_dof[*j] < 0) throw ValidationError(std::string(role) + " joint '" + name + "' is fixed");
      dofs.push_back(static_cast<std::size_t>(e.joint_dof[*j]));
    }
    std::sort(dofs.begin(), dofs.end());
    return dofs;
  };
  auto complement = [&](const std::vector<std::size_t>& taken) {
    std::vector<std::size_t> rest;
    for (std::size_t d = 0; d < e.dof(); ++d) {
      if (!std::binary_search(taken.begin(), taken.end(), d)) rest.push_back(d);
    }
    return rest;
  };

  std::vector<std::size_t> arm = resolve(manifest.arm_joints, "arm");
  std::vector<std::size_t> ee = resolve(manifest.ee_joints, "ee");
  if (manifest.arm_joints.empty() && manifest.ee_joints.empty()) {
    arm = complement({});
  } else if (manifest.arm_joints.empty()) {
    arm = complement(ee);
  } else if (manifest.ee_joints.empty()) {
    ee = complement(arm);
  }
  for (const auto& pad : manifest.pad_links) {
    if (!e.find_link(pad)) throw ValidationError("pad link '" + pad + "' not found in '" + e.name + "'");
  }
  e.arm_indices = std::move(arm);
  e.ee_indices = std::move(ee);
  e.base_origin = manifest.base;
  e.base = manifest.base.pose();

  auto diagnostics = validate_embodiment(e);
  if (!diagnostics.empty()) throw ValidationError("manifest for '" + e.name + "': " + diagnostics.front().message);
}

// ---------------------------------------------------------------------------
// Assembly

Embodiment assemble_embodiment(std::string name, std::vector<LinkSpec> links, std::vector<JointSpec> joints) {
  std::map<std::string, std::size_t, std::less<>> link_by_name;
  for (std::size_t i = 0; i < links.size(); ++i) {
    if (!link_by_name.emplace(links[i].name, i).second) {
      throw ValidationError("duplicate identifier: link '" + links[i].name + "'");
    }
  }
  if (links.empty()) throw StructureError("embodiment '" + name + "' has no links");
  std::set<std::string, std::less<>> joint_names;
  std::vector<int> parent_joint_of_link(links.size(), -1);
  std::vector<std::vector<std::size_t>> child_joints(links.size());
  for (std::size_t j = 0; j < joints.size(); ++j) {
    const auto& spec = joints[j];
    if (!joint_names.insert(spec.name).second) {
      throw ValidationError("duplicate identifier: joint '" + spec.name + "'");
    }
    auto parent = link_by_name.find(spec.parent_link);
    auto child = link_by_name.find(spec.child_link);
    if (parent == link_by_name.end()) {
      throw StructureError("joint '" + spec.name + "': unknown parent link '" + spec.parent_link + "'");
    }
    if (child == link_by_name.end()) {
      throw StructureError("joint '" + spec.name + "': unknown child link '" + spec.child_link + "'");
    }
    if (parent_joint_of_link[child->second] >= 0) {
      throw StructureError("link '" + spec.child_link + "' is the child of more than one joint");
    }
    parent_joint_of_link[child->second] = static_cast<int>(j);
    child_joints[parent->second].push_back(j);
  }

  std::vector<std::size_t> roots;
  for (std::size_t i = 0; i < links.size(); ++i) {
    if (parent_joint_of_link[i] < 0) roots.push_back(i);
  }
  if (roots.empty()) throw StructureError("cyclic link graph: no root link in '" + name + "'");
  if (roots.size() > 1) {
    throw StructureError("link graph of '" + name + "' has several roots ('" + links[roots[0]].name + "', '" +
                         links[roots[1]].name + "')");
  }

  // Depth-first preorder; children follow declaration order.
  std::vector<std::size_t> link_order;
  std::vector<std::size_t> joint_order;
  std::vector<bool> visited(links.size(), false);
  std::vector<std::pair<std::size_t, int>> stack{{roots[0], -1}};
  while (!stack.empty()) {
    auto [link, via_joint] = stack.back();
    stack.pop_back();
    if (visited[link]) throw StructureError("cyclic link graph at link '" + links[link].name + "'");
    visited[link] = true;
    link_order.push_back(link);
    if (via_joint >= 0) joint_order.push_back(static_cast<std::size_t>(via_joint));
    const auto& kids = child_joints[link];
    for (auto it = kids.rbegin(); it != kids.rend(); ++it) {
      const std::size_t child = link_by_name.find(joints[*it].child_link)->second;
      stack.emplace_back(child, static_cast<int>(*it));
    }
  }
  if (link_order.size() != links.size()) {
    for (std::size_t i = 0; i < links.size(); ++i) {
      if (!visited[i]) throw StructureError("cyclic link graph: link '" + links[i].name + "' unreachable from root");
    }
  }

  Embodiment e;
  e.name = std::move(name);
  std::vector<int> new_link_index(links.size());
  for (std::size_t k = 0; k < link_order.size(); ++k) new_link_index[link_order[k]] = static_cast<int>(k);
  for (std::size_t k = 0; k < link_order.size(); ++k) e.links.push_back(std::move(links[link_order[k]]));
  for (std::size_t k = 0; k < joint_order.size(); ++k) e.joints.push_back(std::move(joints[joint_order[k]]));

  e.link_parent_joint.assign(e.links.size(), -1);
  for (std::size_t j = 0; j < e.joints.size(); ++j) {
    const auto& spec = e.joints[j];
    const int parent = new_link_index[link_by_name.find(spec.parent_link)->second];
    const int child = new_link_index[link_by_name.find(spec.child_link)->second];
    e.joint_parent_link.push_back(parent);
    e.joint_child_link.push_back(child);
    e.link_parent_joint[static_cast<std::size_t>(child)] = static_cast<int>(j);
    e.links[static_cast<std::size_t>(child)].parent_joint = spec.name;
    if (spec.kind == JointKind::fixed) {
      e.joint_dof.push_back(-1);
    } else {
      e.joint_dof.push_back(static_cast<int>(e.dof_joint.size()));
      e.dof_joint.push_back(static_cast<int>(j));
    }
  }
  e.links.front().parent_joint.clear();
  for (std::size_t d = 0; d < e.dof(); ++d) e.arm_indices.push_back(d);

  auto diagnostics = validate_embodiment(e);
  if (!diagnostics.empty()) {
    std::string message = "embodiment '" + e.name + "' is invalid:";
    for (const auto& d : diagnostics) message += " [" + d.message + "]";
    throw ValidationError(message);
  }
  return e;
}

// ---------------------------------------------------------------------------
// Validation

std::vector<Diagnostic> validate_embodiment(const Embodiment& e) {
  std::vector<Diagnostic> out;
  auto report = [&](std::string code, std::string message) {
    out.push_back({std::move(code), std::move(message)});
  };

  std::set<std::string, std::less<>> names;
  for (const auto& link : e.links) {
    if (!names.insert(link.name).second) report("duplicate identifier", "duplicate identifier: link '" + link.name + "'");
  }
  names.clear();
  for (const auto& joint : e.joints) {
    if (!names.insert(joint.name).second) report("duplicate identifier", "duplicate identifier: joint '" + joint.name + "'");
  }

  std::size_t movable = 0;
  for (const auto& j : e.joints) {
    if (j.kind == JointKind::fixed) continue;
    ++movable;
    if (!j.axis.allFinite() || std::abs(j.axis.norm() - 1.0) > 1e-9) {
      report("non-unit axis", "non-unit axis on joint '" + j.name + "'");
    }
    if (!std::isfinite(j.lower) || !std::isfinite(j.upper)) {
      report("invalid limits", "non-finite limits on joint '" + j.name + "'");
    } else if (j.lower > j.upper) {
      report("invalid limits", "lower > upper on joint '" + j.name + "'");
    }
  }

  for (const auto& link : e.links) {
    if (!link.geometry) continue;
    if (const auto* mesh = std::get_if<TriangleMesh>(&link.geometry->shape)) {
      if (mesh->faces.empty()) report("empty mesh", "mesh on link '" + link.name + "' has no faces");
      const int n = static_cast<int>(mesh->vertices.size());
      for (const auto& f : mesh->faces) {
        if (std::any_of(f.begin(), f.end(), [n](int i) { return i < 0 || i >= n; })) {
          report("face index out of range", "face index out of range in mesh on link '" + link.name + "'");
          break;
        }
      }
    } else {
      const auto& box = std::get<BoxPrimitive>(link.geometry->shape);
      if (!((box.half_extents.array() > 0.0).all())) {
        report("non-positive half extent", "box on link '" + link.name + "' has a non-positive half extent");
      }
    }
  }

  const bool tables_sized = e.joint_dof.size() == e.joints.size() && e.link_parent_joint.size() == e.links.size() &&
                            e.joint_parent_link.size() == e.joints.size() && e.joint_child_link.size() == e.joints.size();
  if (!tables_sized) {
    report("structure", "index tables do not match link/joint lists");
  } else {
    std::size_t roots = 0;
    for (int pj : e.link_parent_joint) roots += pj < 0 ? 1 : 0;
    if (roots != 1) report("structure", "link graph must have exactly one root");
    for (std::size_t j = 0; j < e.joints.size(); ++j) {
      // Depth-first storage implies parents precede children; anything else is a cycle or corruption.
      if (e.joint_parent_link[j] >= e.joint_child_link[j]) {
        report("structure", "joint '" + e.joints[j].name + "' breaks depth-first link order");
      }
    }
  }

  if (e.dof() != movable) {
    report("dof mismatch", "dof " + std::to_string(e.dof()) + " differs from " + std::to_string(movable) +
                               " non-fixed joints");
  }
  std::vector<int> seen(e.dof(), 0);
  bool in_range = true;
  for (const auto* set : {&e.arm_indices, &e.ee_indices}) {
    for (auto d : *set) {
      if (d < e.dof()) {
        ++seen[d];
      } else {
        in_range = false;
      }
    }
  }
  if (!in_range) report("partition", "arm/ee index out of range");
  if (std::any_of(seen.begin(), seen.end(), [](int c) { return c > 1; })) {
    report("partition overlap", "arm and ee index sets overlap");
  }
  if (std::any_of(seen.begin(), seen.end(), [](int c) { return c == 0; })) {
    report("partition coverage", "arm and ee index sets do not cover every dof");
  }
  if (orthonormality_error(e.base.rotation) > 1e-9 || !e.base.translation.allFinite()) {
    report("base transform", "base transform is not rigid");
  }
  return out;
}

// ---------------------------------------------------------------------------
// URDF subset

namespace {

Vec3 parse_triple(const std::string& text, const std::string& context) {
  std::istringstream in(text);
  Vec3 v;
  if (!(in >> v.x() >> v.y() >> v.z())) throw ParseError(context + ": expected three numbers, got '" + text + "'");
  std::string extra;
  if (in >> extra) throw ParseError(context + ": expected three numbers, got '" + text + "'");
  return v;
}

double parse_number(const std::string& text, const std::string& context) {
  try {
    std::size_t used = 0;
    const double value = std::stod(text, &used);
    if (used != text.size() && text.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(text);
    return value;
  } catch (const std::exception&) {
    throw ParseError(context + ": expected a number, got '" + text + "'");
  }
}

std::optional<std::string> attribute(const pt::ptree& node, const char* name) {
  if (auto attrs = node.get_child_optional("<xmlattr>")) {
    if (auto v = attrs->get_optional<std::string>(name)) return *v;
  }
  return std::nullopt;
}

std::string required_attribute(const pt::ptree& node, const char* name, const std::string& context) {
  if (auto v = attribute(node, name)) return *v;
  throw ParseError(context + ": missing attribute '" + name + "'");
}

Origin parse_urdf_origin(const pt::ptree& parent, const std::string& context) {
  Origin o;
  if (auto node = parent.get_child_optional("origin")) {
    if (auto xyz = attribute(*node, "xyz")) o.xyz = parse_triple(*xyz, context + " <origin xyz>");
    if (auto rpy = attribute(*node, "rpy")) o.rpy = parse_triple(*rpy, context + " <origin rpy>");
  }
  return o;
}

std::filesystem::path resolve_mesh_path(const std::string& filename, const std::filesystem::path& base_dir,
                                        const std::string& context) {
  std::string path = filename;
  if (path.rfind("file://", 0) == 0) path = path.substr(7);
  if (path.rfind("package://", 0) == 0) {
    throw ParseError(context + ": package:// mesh URIs are not supported ('" + filename + "')");
  }
  std::filesystem::path p(path);
  if (p.is_relative()) p = base_dir / p;
  return p;
}

std::optional<LinkGeometry> parse_urdf_geometry(const pt::ptree& holder, const std::string& context,
                                                const std::filesystem::path& base_dir) {
  auto geometry = holder.get_child_optional("geometry");
  if (!geometry) throw ParseError(context + ": missing <geometry>");
  LinkGeometry out;
  out.origin = parse_urdf_origin(holder, context);
  for (const auto& [tag, node] : *geometry) {
    if (tag == "<xmlattr>" || tag == "<xmlcomment>") continue;
    if (tag == "box") {
      const Vec3 size = parse_triple(required_attribute(node, "size", context + " <box>"), context + " <box size>");
      out.shape = BoxPrimitive{0.5 * size};
      return out;
    }
    if (tag == "mesh") {
      const std::string filename = required_attribute(node, "filename", context + " <mesh>");
      double scale = 1.0;
      if (auto s = attribute(node, "scale")) {
        const Vec3 sv = parse_triple(*s, context + " <mesh scale>");
        if (sv.x() != sv.y() || sv.y() != sv.z()) {
          throw ParseError(context + ": non-uniform mesh scale is not supported");
        }
        scale = sv.x();
      }
      out.shape = load_mesh(resolve_mesh_path(filename, base_dir, context), scale);
      return out;
    }
    warn(context + ": unsupported geometry <" + tag + "> ignored");
    return std::nullopt;
  }
  throw ParseError(context + ": empty <geometry>");
}

Embodiment parse_urdf(std::string_view text, const std::filesystem::path& base_dir) {
  pt::ptree tree;
  try {
    std::istringstream in{std::string(text)};
    pt::read_xml(in, tree);
  } catch (const pt::xml_parser_error& err) {
    throw ParseError("URDF line " + std::to_string(err.line()) + ": " + err.message());
  }
  auto robot = tree.get_child_optional("robot");
  if (!robot) throw ParseError("URDF: missing <robot> root element");
  const std::string robot_name = attribute(*robot, "name").value_or("robot");

  std::vector<LinkSpec> links;
  std::vector<JointSpec> joints;
  for (const auto& [tag, node] : *robot) {
    if (tag == "<xmlattr>" || tag == "<xmlcomment>") continue;
    if (tag == "link") {
      LinkSpec link;
      link.name = required_attribute(node, "name", "<link>");
      const std::string context = "link '" + link.name + "'";
      const pt::ptree* source = nullptr;
      int visuals = 0;
      for (const auto& [child_tag, child] : node) {
        if (child_tag == "visual") {
          if (visuals++ == 0) source = &child;
        } else if (child_tag == "collision") {
          if (!source) source = &child;
        } else if (child_tag == "inertial") {
          warn(context + ": <inertial> ignored");
        }
      }
      if (node.count("collision") > 0) warn(context + ": <collision> is not distinguished from <visual>");
      if (visuals > 1) warn(context + ": only the first <visual> is used");
      if (source) link.geometry = parse_urdf_geometry(*source, context, base_dir);
      links.push_back(std::move(link));
    } else if (tag == "joint") {
      JointSpec joint;
      joint.name = required_attribute(node, "name", "<joint>");
      const std::string context = "joint '" + joint.name + "'";
      const std::string type = required_attribute(node, "type", context);
      auto kind = joint_kind_from_string(type);
      if (!kind) throw ParseError(context + ": unsupported joint type '" + type + "'");
      joint.kind = *kind;
      auto parent = node.get_child_optional("parent");
      auto child = node.get_child_optional("child");
      if (!parent || !child) throw ParseError(context + ": missing <parent> or <child>");
      joint.parent_link = required_attribute(*parent, "link", context + " <parent>");
      joint.child_link = required_attribute(*child, "link", context + " <child>");
      joint.origin = parse_urdf_origin(node, context);
      joint.axis = Vec3::UnitX();
      if (auto axis = node.get_child_optional("axis")) {
        joint.axis = parse_triple(required_attribute(*axis, "xyz", context + " <axis>"), context + " <axis xyz>");
      }
      if (joint.kind != JointKind::fixed) {
        const double norm = joint.axis.norm();
        if (!(norm > 0.0)) throw ValidationError(context + ": zero axis on non-fixed joint");
        joint.axis /= norm;
        auto limit = node.get_child_optional("limit");
        if (!limit || !attribute(*limit, "lower") || !attribute(*limit, "upper")) {
          throw ValidationError(context + ": missing joint limits on non-fixed joint");
        }
        joint.lower = parse_number(*attribute(*limit, "lower"), context + " <limit lower>");
        joint.upper = parse_number(*attribute(*limit, "upper"), context + " <limit upper>");
        if (joint.lower > joint.upper) {
          throw ValidationError(context + ": lower limit " + std::to_string(joint.lower) + " exceeds upper " +
                                std::to_string(joint.upper));
        }
      } else {
        joint.axis = Vec3::UnitX();
      }
      for (const char* ignored : {"dynamics", "mimic", "safety_controller", "calibration"}) {
        if (node.count(ignored) > 0) warn(context + ": <" + ignored + "> ignored");
      }
      joints.push_back(std::move(joint));
    } else {
      warn("URDF: <" + tag + "> ignored");
    }
  }
  return assemble_embodiment(robot_name, std::move(links), std::move(joints));
}

// ---------------------------------------------------------------------------
// Native JSON

LinkGeometry geometry_from_json(const json& j, const std::string& context, const std::filesystem::path& base_dir) {
  LinkGeometry g;
  if (j.contains("origin")) g.origin = origin_from_json(j["origin"], context + ".origin");
  const std::string type = j.at("type").get<std::string>();
  if (type == "box") {
    g.shape = BoxPrimitive{vec3_from_json(j.at("half_extents"), context + ".half_extents")};
  } else if (type == "mesh") {
    if (j.contains("file")) {
      const double scale = j.value("scale", 1.0);
      g.shape = load_mesh(resolve_mesh_path(j["file"].get<std::string>(), base_dir, context), scale);
    } else {
      TriangleMesh mesh;
      for (const auto& v : j.at("vertices")) mesh.vertices.push_back(vec3_from_json(v, context + ".vertices"));
      for (const auto& f : j.at("faces")) {
        if (!f.is_array() || f.size() != 3) throw ParseError(context + ".faces: expected index triples");
        mesh.faces.push_back({f[0].get<int>(), f[1].get<int>(), f[2].get<int>()});
      }
      g.shape = std::move(mesh);
    }
  } else {
    throw ParseError(context + ": unknown geometry type '" + type + "'");
  }
  return g;
}

ordered_json geometry_to_json(const LinkGeometry& g) {
  ordered_json j;
  if (const auto* box = std::get_if<BoxPrimitive>(&g.shape)) {
    j["type"] = "box";
    j["half_extents"] = vec3_to_json(box->half_extents);
  } else {
    const auto& mesh = std::get<TriangleMesh>(g.shape);
    j["type"] = "mesh";
    ordered_json verts = ordered_json::array();
    for (const auto& v : mesh.vertices) verts.push_back(vec3_to_json(v));
    ordered_json faces = ordered_json::array();
    for (const auto& f : mesh.faces) faces.push_back({f[0], f[1], f[2]});
    j["vertices"] = std::move(verts);
    j["faces"] = std::move(faces);
  }
  j["origin"] = origin_to_json(g.origin);
  return j;
}

Embodiment parse_native(std::string_view text, const std::filesystem::path& base_dir) {
  const json doc = parse_json_document(text, "native embodiment");
  std::vector<LinkSpec> links;
  std::vector<JointSpec> joints;
  std::string name;
  EmbodimentManifest manifest;
  bool has_partition = false;
  std::string context = "native embodiment";
  try {
    name = doc.at("name").get<std::string>();
    const auto& jl = doc.at("links");
    for (std::size_t i = 0; i < jl.size(); ++i) {
      context = "links[" + std::to_string(i) + "]";
      LinkSpec link;
      link.name = jl[i].at("name").get<std::string>();
      if (jl[i].contains("geometry") && !jl[i]["geometry"].is_null()) {
        link.geometry = geometry_from_json(jl[i]["geometry"], context + ".geometry", base_dir);
      }
      links.push_back(std::move(link));
    }
    const auto& jj = doc.at("joints");
    for (std::size_t i = 0; i < jj.size(); ++i) {
      context = "joints[" + std::to_string(i) + "]";
      const auto& node = jj[i];
      JointSpec joint;
      joint.name = node.at("name").get<std::string>();
      const std::string type = node.at("type").get<std::string>();
      auto kind = joint_kind_from_string(type);
      if (!kind) throw ParseError(context + ": unsupported joint type '" + type + "'");
      joint.kind = *kind;
      joint.parent_link = node.at("parent").get<std::string>();
      joint.child_link = node.at("child").get<std::string>();
      if (node.contains("origin")) joint.origin = origin_from_json(node["origin"], context + ".origin");
      if (node.contains("axis")) joint.axis = vec3_from_json(node["axis"], context + ".axis");
      if (joint.kind != JointKind::fixed) {
        if (!node.contains("lower") || !node.contains("upper")) {
          throw ValidationError(context + " ('" + joint.name + "'): missing joint limits on non-fixed joint");
        }
        joint.lower = node["lower"].get<double>();
        joint.upper = node["upper"].get<double>();
        if (joint.lower > joint.upper) {
          throw ValidationError(context + " ('" + joint.name + "'): lower limit exceeds upper limit");
        }
      }
      joints.push_back(std::move(joint));
    }
    context = "native embodiment";
    if (doc.contains("arm_joints")) {
      manifest.arm_joints = string_list(doc["arm_joints"], "arm_joints");
      has_partition = true;
    }
    if (doc.contains("ee_joints")) {
      manifest.ee_joints = string_list(doc["ee_joints"], "ee_joints");
      has_partition = true;
    }
    if (doc.contains("base")) {
      manifest.base = origin_from_json(doc["base"], "base");
      has_partition = true;
    }
  } catch (const json::exception& err) {
    throw ParseError(context + ": " + err.what());
  }
  Embodiment e = assemble_embodiment(std::move(name), std::move(links), std::move(joints));
  if (has_partition) apply_manifest(e, manifest);
  return e;
}

}  // namespace

Embodiment parse_robot_description(std::string_view text, DescriptionFormat format,
                                   const std::filesystem::path& base_dir) {
  return format == DescriptionFormat::urdf_subset ? parse_urdf(text, base_dir) : parse_native(text, base_dir);
}

Embodiment load_embodiment(const std::filesystem::path& description,
                           const std::optional<std::filesystem::path>& manifest) {
  const std::string ext = description.extension().string();
  const DescriptionFormat format = (ext == ".json") ? DescriptionFormat::native : DescriptionFormat::urdf_subset;
  Embodiment e = parse_robot_description(read_text_file(description), format, description.parent_path());
  if (manifest) apply_manifest(e, load_manifest(*manifest));
  return e;
}

std::string serialize_embodiment(const Embodiment& e) {
  ordered_json doc;
  doc["format"] = "cei-embodiment";
  doc["version"] = 1;
  doc["name"] = e.name;
  ordered_json links = ordered_json::array();
  for (const auto& link : e.links) {
    ordered_json l;
    l["name"] = link.name;
    if (link.geometry) l["geometry"] = geometry_to_json(*link.geometry);
    links.push_back(std::move(l));
  }
  doc["links"] = std::move(links);
  ordered_json joints = ordered_json::array();
  for (const auto& joint : e.joints) {
    ordered_json j;
    j["name"] = joint.name;
    j["type"] = std::string(to_string(joint.kind));
    j["parent"] = joint.parent_link;
    j["child"] = joint.child_link;
    j["origin"] = origin_to_json(joint.origin);
    j["axis"] = vec3_to_json(joint.axis);
    if (joint.kind != JointKind::fixed) {
      j["lower"] = joint.lower;
      j["upper"] = joint.upper;
    }
    joints.push_back(std::move(j));
  }
  doc["joints"] = std::move(joints);
  ordered_json arm = ordered_json::array(), ee = ordered_json::array();
  for (auto d : e.arm_indices) arm.push_back(e.dof_spec(d).name);
  for (auto d : e.ee_indices) ee.push_back(e.dof_spec(d).name);
  doc["arm_joints"] = std::move(arm);
  doc["ee_joints"] = std::move(ee);
  doc["base"] = origin_to_json(e.base_origin);
  return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Surface sampling

OrientedTriangles triangulate_geometry(const LinkGeometry& geometry) {
  OrientedTriangles out;
  const Pose place = geometry.origin.pose();
  if (const auto* box = std::get_if<BoxPrimitive>(&geometry.shape)) {
    const Vec3 h = box->half_extents;
    // Eight corners indexed by sign bits (x, y, z); faces wound outward.
    auto corner = [&](int i) {
      return place.apply(Vec3((i & 1) ? h.x() : -h.x(), (i & 2) ? h.y() : -h.y(), (i & 4) ? h.z() : -h.z()));
    };
    const int quads[6][4] = {{1, 3, 7, 5}, {0, 4, 6, 2}, {2, 6, 7, 3}, {0, 1, 5, 4}, {4, 5, 7, 6}, {0, 2, 3, 1}};
    for (const auto& q : quads) {
      out.triangles.push_back({corner(q[0]), corner(q[1]), corner(q[2])});
      out.triangles.push_back({corner(q[0]), corner(q[2]), corner(q[3])});
    }
  } else {
    const auto& mesh = std::get<TriangleMesh>(geometry.shape);
    for (const auto& f : mesh.faces) {
      out.triangles.push_back({place.apply(mesh.vertices[f[0]]), place.apply(mesh.vertices[f[1]]),
                               place.apply(mesh.vertices[f[2]])});
    }
  }

  Vec3 weighted = Vec3::Zero();
  for (const auto& t : out.triangles) {
    const Vec3 cross = (t[1] - t[0]).cross(t[2] - t[0]);
    const double norm = cross.norm();
    out.areas.push_back(0.5 * norm);
    out.normals.push_back(norm > 0.0 ? Vec3(cross / norm) : Vec3::Zero());
    out.total_area += 0.5 * norm;
    weighted += 0.5 * norm * (t[0] + t[1] + t[2]) / 3.0;
  }
  if (out.total_area > 0.0) out.centroid = weighted / out.total_area;

  int outward = 0, inward = 0;
  for (std::size_t f = 0; f < out.triangles.size(); ++f) {
    const auto& t = out.triangles[f];
    const double side = out.normals[f].dot((t[0] + t[1] + t[2]) / 3.0 - out.centroid);
    if (side > 1e-15) ++outward;
    if (side < -1e-15) ++inward;
  }
  if (inward > outward) {
    for (auto& n : out.normals) n = -n;
  }
  return out;
}

std::vector<SurfaceSample> sample_link_surface(const Embodiment& e, std::string_view link, std::size_t count,
                                               std::uint64_t seed) {
  const auto& spec = e.links[e.link_index(link)];
  if (!spec.geometry) throw ValidationError("link '" + spec.name + "' has no geometry to sample");
  if (count == 0) throw ValidationError("sample count must be positive");
  Rng rng(seed);
  std::vector<SurfaceSample> samples;
  samples.reserve(count);

  if (const auto* box = std::get_if<BoxPrimitive>(&spec.geometry->shape)) {
    const Pose place = spec.geometry->origin.pose();
    const Vec3 h = box->half_extents;
    // Faces +x, -x, +y, -y, +z, -z.
    std::array<double, 6> areas{};
    for (int f = 0; f < 6; ++f) {
      const int axis = f / 2;
      areas[f] = 4.0 * h[(axis + 1) % 3] * h[(axis + 2) % 3];
    }
    const double total = areas[0] + areas[1] + areas[2] + areas[3] + areas[4] + areas[5];
    std::array<std::size_t, 6> counts{};
    std::array<double, 6> remainder{};
    std::size_t assigned = 0;
    for (int f = 0; f < 6; ++f) {
      const double exact = static_cast<double>(count) * areas[f] / total;
      counts[f] = static_cast<std::size_t>(std::floor(exact));
      remainder[f] = exact - static_cast<double>(counts[f]);
      assigned += counts[f];
    }
    while (assigned < count) {
      int best = 0;
      for (int f = 1; f < 6; ++f) {
        if (remainder[f] > remainder[best]) best = f;
      }
      ++counts[best];
      remainder[best] = -1.0;
      ++assigned;
    }
    for (int f = 0; f < 6; ++f) {
      const int axis = f / 2;
      const double sign = (f % 2 == 0) ? 1.0 : -1.0;
      const int u = (axis + 1) % 3, v = (axis + 2) % 3;
      Vec3 normal = Vec3::Zero();
      normal[axis] = sign;
      for (std::size_t k = 0; k < counts[f]; ++k) {
        Vec3 p = Vec3::Zero();
        p[axis] = sign * h[axis];
        p[u] = rng.uniform(-h[u], h[u]);
        p[v] = rng.uniform(-h[v], h[v]);
        samples.push_back({place.apply(p), place.rotate(normal), static_cast<std::size_t>(f)});
      }
    }
    return samples;
  }

  const OrientedTriangles tri = triangulate_geometry(*spec.geometry);
  if (!(tri.total_area > 0.0)) throw ValidationError("link '" + spec.name + "' has zero surface area");
  std::vector<double> cumulative(tri.areas.size());
  std::partial_sum(tri.areas.begin(), tri.areas.end(), cumulative.begin());
  for (std::size_t k = 0; k < count; ++k) {
    const double r = rng.uniform() * cumulative.back();
    std::size_t f = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), r) - cumulative.begin());
    f = std::min(f, cumulative.size() - 1);
    while (tri.areas[f] <= 0.0 && f > 0) --f;
    const double s = std::sqrt(rng.uniform());
    const double r2 = rng.uniform();
    const auto& t = tri.triangles[f];
    const Vec3 p = (1.0 - s) * t[0] + s * (1.0 - r2) * t[1] + s * r2 * t[2];
    samples.push_back({p, tri.normals[f], f});
  }
  return samples;
}

}  // namespace cei
