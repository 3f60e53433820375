#pragma once

#include <cstdint>
#include <string>

#include "splatalign/deform.hpp"
#include "splatalign/math.hpp"
#include "splatalign/optimizer.hpp"

namespace splatalign {

// Everything a run needs, mirrored field-for-field by the JSON config file.
// Unknown keys in the file are rejected.
struct RunConfig {
    // Paths.
    std::string frames_dir;
    std::string meshes_dir;
    std::string out_dir = "out";

    // Canvas.
    int width = 64;
    int height = 64;
    Vec3 background{0.0, 0.0, 0.0};

    // Loss weights.
    double lambda_lpips = 0.1;  // the perceptual weight inside texture alignment
    double w_ta = 1.0;
    double w_ga = 1.0;
    double w_t2i = 0.01;
    double w_ma = 1.0;
    // Refinement residuals are summed over pixels and carry the alpha/sigma
    // amplification, so their useful weights sit orders of magnitude below
    // the mean-scaled alignment losses.
    double w_time = 1e-6;
    double w_mv = 1e-6;

    // Stage budgets; 400 + 200 = the default 600-iteration run.
    int static_iters = 400;
    int dynamic_iters = 200;

    // Optimizer.
    AdamSettings adam;
    CloudOptimizer::Rates rates;
    double lr_deform = 1e-3;

    // Scene sampling.
    int n_points = 1500;
    int n_views = 4;                 // N_c' random cameras per iteration
    double view_elevation_min_deg = -15.0;
    double view_elevation_max_deg = 30.0;
    double focal_jitter_px = 8.0;
    double camera_radius = 2.4;      // orbit radius, scene units
    double z_near = 0.05;

    // Timing.
    int n_frames = 8;  // expected clip length; ingestion may override

    // Determinism and parallelism.
    uint64_t seed = 0;
    int threads = 0;  // 0 = auto (capped at 8)

    // Oracle endpoints; "mock" selects the analytic oracles.
    std::string oracle = "mock";

    // Focal sweep.
    double focal_init = 0.0;  // 0 = image width
    double focal_offset_min = -64.0;
    double focal_offset_max = 64.0;
    int focal_candidates = 33;
    bool focal_coarse_to_fine = false;
    bool focal_per_frame = false;  // sweep every timestep instead of frame 0 only

    // Deformation network.
    DeformationField::Config deform;

    // Diffusion schedule.
    int t_max = 1000;
    double tau_min_fraction = 0.02;
    double tau_max_fraction = 0.98;

    static RunConfig from_json_file(const std::string& path);
    static RunConfig from_json_text(const std::string& text);
    std::string to_json_text() const;
};

}  // namespace splatalign
