#pragma once

#include <string>
#include <vector>

#include "splatalign/scene.hpp"

namespace splatalign {

struct FocalSweepConfig {
    double initial_focal = 0.0;     // f' in pixels
    double offset_min = -64.0;      // delta f range around f'
    double offset_max = 64.0;
    int candidate_count = 33;       // M
    Camera front_view;              // pose/intrinsics template; focal is replaced
    Vec3 background{0.0, 0.0, 0.0};
    bool coarse_to_fine = false;    // second sweep around the winner at 1/8 range
    std::string diagnostics_csv;    // when set, the MSE curve is written here
};

struct FocalSweepResult {
    double focal = 0.0;
    std::vector<double> candidates;
    std::vector<double> mse;  // aligned with candidates
};

// Renders the mesh front view at M focals evenly spaced in
// [f' + offset_min, f' + offset_max] and returns the argmin-MSE focal
// (first index on ties) together with the full curve.
FocalSweepResult sweep_focal(const TriMesh& mesh, const ImageBuffer& frame,
                             const FocalSweepConfig& config);

// Deterministic uniform perturbation in [-magnitude, +magnitude]; a pure
// function of (focal, magnitude, seed).
double jitter_focal(double focal, double magnitude, uint64_t seed);

}  // namespace splatalign
