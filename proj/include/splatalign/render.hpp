#pragma once

#include <optional>
#include <vector>

#include "splatalign/scene.hpp"

namespace splatalign {

// A Gaussian after EWA projection onto the image plane. The conic is the
// inverse of the dilated 2D covariance; the footprint is truncated at three
// standard deviations.
struct Splat2D {
    Vec2 mean;                       // pixels
    double conic_a = 0.0, conic_b = 0.0, conic_c = 0.0;
    double depth = 0.0;              // camera-space z
    double radius = 0.0;             // 3-sigma bound in pixels
    Vec3 color;
    double opacity = 0.0;            // sigmoid of the stored logit
};

// Per-point gradients mirroring GaussianCloud's fields.
struct RenderGrads {
    std::vector<Vec3> positions;
    std::vector<std::array<double, 4>> rotations;
    std::vector<Vec3> log_scales;
    std::vector<Vec3> colors;
    std::vector<double> opacity_logits;

    explicit RenderGrads(std::size_t n = 0) { resize(n); }
    void resize(std::size_t n) {
        positions.assign(n, Vec3{});
        rotations.assign(n, {0, 0, 0, 0});
        log_scales.assign(n, Vec3{});
        colors.assign(n, Vec3{});
        opacity_logits.assign(n, 0.0);
    }
    RenderGrads& operator+=(const RenderGrads& o);
    bool finite() const;
};

struct RenderSettings {
    Vec3 background{0.0, 0.0, 0.0};
    int threads = 1;             // <=1 runs inline
    int tile_size = 16;
    double conic_dilation = 0.3; // px^2 added to the projected covariance diagonal
    double cutoff_sigma = 3.0;   // footprint support
    double eta_max = 0.999;      // keeps the transmittance product differentiable
};

// EWA projection of one Gaussian. Returns nullopt when the point is culled
// (depth below the camera near plane).
std::optional<Splat2D> project_gaussian(const Vec3& mean, const Mat3& covariance,
                                        const Camera& camera,
                                        const RenderSettings& settings = {});

// Depth-sorted alpha blending of the full cloud (ties broken by point index).
// Alpha channel carries the accumulated opacity 1 - prod(1 - eta_i).
ImageBuffer render(const GaussianCloud& cloud, const Camera& camera,
                   const RenderSettings& settings = {});

// Exact vector-Jacobian product of `render` with respect to every cloud
// field. `upstream_rgb`/`upstream_alpha` hold dLoss/dPixel for the image the
// same inputs produced.
RenderGrads render_backward(const GaussianCloud& cloud, const Camera& camera,
                            const RgbField& upstream_rgb, const ScalarField& upstream_alpha,
                            const RenderSettings& settings = {});

}  // namespace splatalign
