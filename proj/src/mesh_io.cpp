#include "cei/mesh_io.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "cei/errors.hpp"

namespace cei {
namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open mesh file '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// OBJ face tokens look like "3", "3/1", "3//2" or "3/1/2"; negative indices are relative.
int parse_obj_index(const std::string& token, std::size_t vertex_count, std::size_t line) {
  const std::string head = token.substr(0, token.find('/'));
  int index = 0;
  try {
    index = std::stoi(head);
  } catch (const std::exception&) {
    throw ParseError("OBJ line " + std::to_string(line) + ": bad face index '" + token + "'");
  }
  if (index < 0) index = static_cast<int>(vertex_count) + index + 1;
  if (index < 1 || static_cast<std::size_t>(index) > vertex_count) {
    throw ParseError("OBJ line " + std::to_string(line) + ": face index out of range");
  }
  return index - 1;
}

// Binary STL vertices are deduplicated so the mesh has shared indices.
struct VertexKey {
  float x, y, z;
  bool operator<(const VertexKey& o) const {
    if (x != o.x) return x < o.x;
    if (y != o.y) return y < o.y;
    return z < o.z;
  }
};

class MeshBuilder {
 public:
  int add(const Vec3& v) {
    const VertexKey key{static_cast<float>(v.x()), static_cast<float>(v.y()), static_cast<float>(v.z())};
    auto [it, inserted] = lookup_.try_emplace(key, static_cast<int>(mesh_.vertices.size()));
    if (inserted) mesh_.vertices.push_back(v);
    return it->second;
  }
  void add_triangle(const Vec3& a, const Vec3& b, const Vec3& c) {
    mesh_.faces.push_back({add(a), add(b), add(c)});
  }
  TriangleMesh take() { return std::move(mesh_); }

 private:
  TriangleMesh mesh_;
  std::map<VertexKey, int> lookup_;
};

bool looks_like_ascii_stl(std::string_view bytes) {
  if (bytes.size() < 6 || bytes.substr(0, 5) != "solid") return false;
  if (bytes.size() >= 84) {
    std::uint32_t count = 0;
    std::memcpy(&count, bytes.data() + 80, 4);
    if (84 + static_cast<std::size_t>(count) * 50 == bytes.size()) return false;
  }
  return bytes.find("facet") != std::string_view::npos;
}

}  // namespace

TriangleMesh parse_obj(std::string_view text) {
  TriangleMesh mesh;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string tag;
    if (!(fields >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      Vec3 v;
      if (!(fields >> v.x() >> v.y() >> v.z())) {
        throw ParseError("OBJ line " + std::to_string(line_no) + ": malformed vertex");
      }
      mesh.vertices.push_back(v);
    } else if (tag == "f") {
      std::vector<int> polygon;
      std::string token;
      while (fields >> token) polygon.push_back(parse_obj_index(token, mesh.vertices.size(), line_no));
      if (polygon.size() < 3) {
        throw ParseError("OBJ line " + std::to_string(line_no) + ": face with fewer than 3 vertices");
      }
      for (std::size_t k = 1; k + 1 < polygon.size(); ++k) {
        mesh.faces.push_back({polygon[0], polygon[k], polygon[k + 1]});
      }
    }
  }
  if (mesh.faces.empty()) throw ParseError("OBJ mesh has no faces");
  return mesh;
}

TriangleMesh parse_stl(std::string_view bytes) {
  MeshBuilder builder;
  if (looks_like_ascii_stl(bytes)) {
    std::istringstream in{std::string(bytes)};
    std::string token;
    std::vector<Vec3> corners;
    while (in >> token) {
      if (token != "vertex") continue;
      Vec3 v;
      if (!(in >> v.x() >> v.y() >> v.z())) throw ParseError("STL: malformed vertex record");
      corners.push_back(v);
      if (corners.size() == 3) {
        builder.add_triangle(corners[0], corners[1], corners[2]);
        corners.clear();
      }
    }
    if (!corners.empty()) throw ParseError("STL: facet with fewer than 3 vertices");
  } else {
    if (bytes.size() < 84) throw ParseError("STL: binary file shorter than its header");
    std::uint32_t count = 0;
    std::memcpy(&count, bytes.data() + 80, 4);
    if (bytes.size() < 84 + static_cast<std::size_t>(count) * 50) {
      throw ParseError("STL: binary file truncated");
    }
    for (std::uint32_t f = 0; f < count; ++f) {
      const char* record = bytes.data() + 84 + static_cast<std::size_t>(f) * 50 + 12;
      std::array<Vec3, 3> corners;
      for (int c = 0; c < 3; ++c) {
        float xyz[3];
        std::memcpy(xyz, record + c * 12, 12);
        corners[c] = Vec3(xyz[0], xyz[1], xyz[2]);
      }
      builder.add_triangle(corners[0], corners[1], corners[2]);
    }
  }
  TriangleMesh mesh = builder.take();
  if (mesh.faces.empty()) throw ParseError("STL mesh has no faces");
  return mesh;
}

TriangleMesh load_mesh(const std::filesystem::path& path, double scale) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  const std::string bytes = read_file(path);
  TriangleMesh mesh;
  if (ext == ".obj") {
    mesh = parse_obj(bytes);
  } else if (ext == ".stl") {
    mesh = parse_stl(bytes);
  } else {
    throw ParseError("unsupported mesh format '" + ext + "' for " + path.string());
  }
  if (scale != 1.0) {
    for (auto& v : mesh.vertices) v *= scale;
  }
  return mesh;
}

}  // namespace cei
