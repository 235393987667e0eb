#pragma once

#include <filesystem>
#include <string_view>

#include "cei/robot_model.hpp"

namespace cei {

/// Wavefront OBJ: `v` and `f` records only; polygons are fan-triangulated.
TriangleMesh parse_obj(std::string_view text);
/// STL, ASCII or binary.
TriangleMesh parse_stl(std::string_view bytes);
/// Dispatches on extension (.obj / .stl), scaling vertices uniformly.
TriangleMesh load_mesh(const std::filesystem::path& path, double scale = 1.0);

}  // namespace cei
