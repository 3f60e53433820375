#pragma once

#include <string>

#include "splatalign/scene.hpp"

namespace splatalign {

// Binary little-endian PLY in the layout common 3DGS viewers read: one vertex
// element with float properties x y z opacity scale_0 scale_1 scale_2 rot_0
// rot_1 rot_2 rot_3 f_dc_0 f_dc_1 f_dc_2. Opacity and scales are stored raw
// (logit / log), colors as DC coefficients (color - 0.5) / C0 with C0 the
// zeroth spherical-harmonic constant.
void export_ply(const GaussianCloud& cloud, const std::string& path);

// Reads the layout above back; property order in the header may vary.
GaussianCloud import_ply(const std::string& path);

}  // namespace splatalign
