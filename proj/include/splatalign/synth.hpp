#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "splatalign/config.hpp"
#include "splatalign/scene.hpp"

namespace splatalign {

// Self-contained test scene: a colored icosphere with a protruding limb,
// animated by a global rotation plus a limb bend, rendered from the front at
// a known focal. Ground truth is carried along for metrics.
struct SynthFixture {
    VideoClip clip;
    std::vector<TriMesh> meshes;            // one per timestep
    double focal = 0.0;                      // the focal the frames were rendered with
    Camera front_camera;
    GaussianCloud gt_cloud;                  // surface samples on the t=0 mesh
    std::vector<GaussianCloud> gt_clouds;    // the same samples tracked through the motion
};

struct SynthOptions {
    double focal = 0.0;           // 0 = config width
    int sphere_subdivisions = 2;
    double sphere_radius = 0.5;
    double limb_length = 0.55;
    double limb_radius = 0.12;
    double bend_amplitude_rad = 0.9;
    double spin_amplitude_rad = 0.45;
    int gt_samples = 400;
};

SynthFixture synth_anchor(uint64_t seed, const RunConfig& config,
                          const SynthOptions& options = {});

// Writes the fixture as the pipeline's ingestion formats: PNG frames and one
// OBJ per timestep.
void write_fixture(const SynthFixture& fixture, const std::string& frames_dir,
                   const std::string& meshes_dir);

}  // namespace splatalign
