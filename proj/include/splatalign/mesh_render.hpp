#pragma once

#include "splatalign/scene.hpp"

namespace splatalign {

// Z-buffered triangle rasterization with perspective-correct vertex-color
// interpolation. Covered pixels get alpha 1, the rest show the background
// with alpha 0. Reference renders only; not differentiable.
ImageBuffer render_mesh(const TriMesh& mesh, const Camera& camera,
                        const Vec3& background = {0.0, 0.0, 0.0});

}  // namespace splatalign
