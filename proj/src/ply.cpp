#include "cei/ply.hpp"

#include <fstream>
#include <sstream>
#include <string>

#include "cei/errors.hpp"

namespace cei {

void write_ply(const GeometryDump& dump, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << "ply\nformat ascii 1.0\n"
      << "element vertex " << dump.vertices.size() << "\n"
      << "property float x\nproperty float y\nproperty float z\n"
      << "property float nx\nproperty float ny\nproperty float nz\n"
      << "property int kind\n"
      << "element edge " << dump.edges.size() << "\n"
      << "property int vertex1\nproperty int vertex2\n"
      << "end_header\n";
  out.precision(9);
  for (const auto& v : dump.vertices) {
    out << static_cast<float>(v.point.x()) << ' ' << static_cast<float>(v.point.y()) << ' '
        << static_cast<float>(v.point.z()) << ' ' << static_cast<float>(v.normal.x()) << ' '
        << static_cast<float>(v.normal.y()) << ' ' << static_cast<float>(v.normal.z()) << ' '
        << static_cast<int>(v.kind) << '\n';
  }
  for (const auto& [a, b] : dump.edges) out << a << ' ' << b << '\n';
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

GeometryDump read_ply(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  std::string line;
  std::size_t vertices = 0, edges = 0;
  if (!std::getline(in, line) || line != "ply") throw ParseError(path.string() + ": missing ply magic");
  while (std::getline(in, line) && line != "end_header") {
    std::istringstream fields(line);
    std::string word, name;
    fields >> word;
    if (word == "format" && line != "format ascii 1.0") throw ParseError(path.string() + ": only ASCII PLY is read");
    if (word == "element") {
      std::size_t count = 0;
      fields >> name >> count;
      if (name == "vertex") vertices = count;
      else if (name == "edge") edges = count;
    }
  }
  if (line != "end_header") throw ParseError(path.string() + ": header not terminated");
  GeometryDump dump;
  dump.vertices.resize(vertices);
  for (auto& v : dump.vertices) {
    float x, y, z, nx, ny, nz;
    int kind;
    if (!(in >> x >> y >> z >> nx >> ny >> nz >> kind)) throw ParseError(path.string() + ": truncated vertex list");
    v.point = Vec3(x, y, z);
    v.normal = Vec3(nx, ny, nz);
    if (kind < 0 || kind > 3) throw ParseError(path.string() + ": unknown vertex kind");
    v.kind = static_cast<DumpKind>(kind);
  }
  dump.edges.resize(edges);
  for (auto& [a, b] : dump.edges) {
    if (!(in >> a >> b)) throw ParseError(path.string() + ": truncated edge list");
    if (a >= vertices || b >= vertices) throw ParseError(path.string() + ": edge index out of range");
  }
  return dump;
}

}  // namespace cei
