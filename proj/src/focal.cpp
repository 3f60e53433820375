#include "splatalign/focal.hpp"

#include <cstdio>
#include <fstream>

#include "splatalign/errors.hpp"
#include "splatalign/losses.hpp"
#include "splatalign/mesh_render.hpp"
#include "splatalign/rng.hpp"

namespace splatalign {

namespace {

FocalSweepResult sweep_once(const TriMesh& mesh, const ImageBuffer& frame, const Camera& base,
                            const Vec3& background, double f0, double lo, double hi, int count) {
    FocalSweepResult result;
    result.candidates.reserve(count);
    for (int k = 0; k < count; ++k) {
        double f = count > 1 ? f0 + lo + (hi - lo) * double(k) / double(count - 1) : f0 + lo;
        result.candidates.push_back(f);
    }
    result.mse.resize(count, 0.0);

    int best = 0;
    for (int k = 0; k < count; ++k) {
        Camera cam = base;
        cam.focal = result.candidates[k];
        ImageBuffer render = render_mesh(mesh, cam, background);
        result.mse[k] = mse_loss(render, frame).value;
        if (result.mse[k] < result.mse[best]) best = k;  // first index wins ties
    }
    result.focal = result.candidates[best];
    return result;
}

}  // namespace

FocalSweepResult sweep_focal(const TriMesh& mesh, const ImageBuffer& frame,
                             const FocalSweepConfig& config) {
    if (mesh.empty()) throw invalid_parameter_error("sweep_focal: empty mesh");
    if (config.candidate_count < 1)
        throw invalid_parameter_error("sweep_focal: candidate_count must be >= 1");
    if (config.offset_min > config.offset_max)
        throw invalid_parameter_error("sweep_focal: offset_min exceeds offset_max");
    if (config.initial_focal + config.offset_min <= 0.0)
        throw invalid_parameter_error("sweep_focal: candidate range reaches a non-positive focal");
    if (frame.width != config.front_view.width || frame.height != config.front_view.height)
        throw invalid_parameter_error("sweep_focal: frame dimensions do not match the camera");

    FocalSweepResult result =
        sweep_once(mesh, frame, config.front_view, config.background, config.initial_focal,
                   config.offset_min, config.offset_max, config.candidate_count);

    if (config.coarse_to_fine && config.candidate_count > 1) {
        double span = (config.offset_max - config.offset_min) / 8.0;
        FocalSweepResult fine =
            sweep_once(mesh, frame, config.front_view, config.background, result.focal,
                       -0.5 * span, 0.5 * span, config.candidate_count);
        // Keep the coarse curve for diagnostics; adopt the refined winner.
        result.focal = fine.focal;
    }

    if (!config.diagnostics_csv.empty()) {
        std::ofstream os(config.diagnostics_csv);
        if (!os) throw io_error("sweep_focal: cannot open " + config.diagnostics_csv);
        os << "candidate_focal,mse\n";
        char buf[80];
        for (std::size_t k = 0; k < result.candidates.size(); ++k) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", result.candidates[k], result.mse[k]);
            os << buf;
        }
    }
    return result;
}

double jitter_focal(double focal, double magnitude, uint64_t seed) {
    if (magnitude < 0.0) throw invalid_parameter_error("jitter_focal: negative magnitude");
    if (magnitude == 0.0) return focal;
    Rng rng(seed);
    return focal + rng.uniform(-magnitude, magnitude);
}

}  // namespace splatalign
