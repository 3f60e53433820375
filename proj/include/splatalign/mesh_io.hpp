#pragma once

#include <string>

#include "splatalign/scene.hpp"

namespace splatalign {

// Wavefront OBJ subset: `v x y z [r g b]` vertices with optional per-vertex
// colors (default 0.7 grey) and `f` faces with 1-based indices in any of the
// i, i/j, i//k, i/j/k forms; polygons are fan-triangulated.
TriMesh read_obj(const std::string& path);
void write_obj(const std::string& path, const TriMesh& mesh);

}  // namespace splatalign
