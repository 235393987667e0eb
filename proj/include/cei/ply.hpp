#pragma once

#include <filesystem>
#include <utility>
#include <vector>

#include "cei/geometry.hpp"

namespace cei {

enum class DumpKind : int { scene = 0, robot = 1, source_rep = 2, target_rep = 3 };

struct DumpVertex {
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::Zero();
  DumpKind kind = DumpKind::scene;
};

/// Points plus line segments between vertex indices.
struct GeometryDump {
  std::vector<DumpVertex> vertices;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
};

/// ASCII PLY: vertex (x y z nx ny nz as float, kind as int) and edge
/// (vertex1 vertex2) elements. Values are printed with 9 significant digits,
/// enough to round-trip float32.
void write_ply(const GeometryDump& dump, const std::filesystem::path& path);
/// Reads files produced by write_ply. Throws ParseError.
GeometryDump read_ply(const std::filesystem::path& path);

}  // namespace cei
