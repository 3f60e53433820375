#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "splatalign/render.hpp"
#include "splatalign/rng.hpp"
#include "splatalign/scene.hpp"

// Shared test utilities: independent oracles and fixture generators. Nothing
// here may call into the tiled render path it is used to check.
namespace testutil {

using namespace splatalign;

// Relative error with an absolute floor, the usual gradient-check metric.
inline double rel_err(double a, double b, double floor = 1e-6) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

// Central difference with kink fallback. Piecewise-smooth functions (ReLU
// stacks) occasionally place a kink inside the difference interval; shrinking
// the step isolates the true derivative there, while a wrong analytic
// gradient keeps failing at every step.
template <typename Probe>
double fd_rel_err(Probe&& probe, double* param, double analytic, double step = 1e-4,
                  double floor = 1e-4) {
    double best = std::numeric_limits<double>::infinity();
    for (int shrink = 0; shrink < 3; ++shrink, step *= 0.1) {
        double saved = *param;
        *param = saved + step;
        double hi = probe();
        *param = saved - step;
        double lo = probe();
        *param = saved;
        best = std::min(best, rel_err((hi - lo) / (2.0 * step), analytic, floor));
        if (best < 1e-3) break;
    }
    return best;
}

// Brute-force blend oracle: projects every Gaussian, sorts the whole cloud by
// (depth, index) and blends per pixel with no tiles and no early termination.
// The eta definition (3-sigma support, clamp) is restated from scratch.
inline ImageBuffer naive_render(const GaussianCloud& cloud, const Camera& camera,
                                const RenderSettings& settings = {}) {
    struct Projected {
        Splat2D splat;
        int index;
    };
    std::vector<Projected> splats;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        Mat3 cov = covariance_of(cloud.rotations[i], cloud.log_scales[i]);
        auto p = project_gaussian(cloud.positions[i], cov, camera, settings);
        if (!p) continue;
        p->color = {clamp01(cloud.colors[i].x), clamp01(cloud.colors[i].y),
                    clamp01(cloud.colors[i].z)};
        p->opacity = 1.0 / (1.0 + std::exp(-cloud.opacity_logits[i]));
        splats.push_back({*p, int(i)});
    }
    std::stable_sort(splats.begin(), splats.end(), [](const Projected& a, const Projected& b) {
        if (a.splat.depth != b.splat.depth) return a.splat.depth < b.splat.depth;
        return a.index < b.index;
    });

    const double m_max = settings.cutoff_sigma * settings.cutoff_sigma;
    ImageBuffer image{camera.width, camera.height};
    for (int y = 0; y < camera.height; ++y)
        for (int x = 0; x < camera.width; ++x) {
            double px = x + 0.5, py = y + 0.5;
            double transmittance = 1.0;
            double r = 0, g = 0, b = 0;
            for (const auto& pr : splats) {
                const Splat2D& sp = pr.splat;
                double dx = px - sp.mean.x, dy = py - sp.mean.y;
                double m = sp.conic_a * dx * dx + 2.0 * sp.conic_b * dx * dy +
                           sp.conic_c * dy * dy;
                if (m > m_max) continue;
                double eta = std::min(sp.opacity * std::exp(-0.5 * m), settings.eta_max);
                r += sp.color.x * eta * transmittance;
                g += sp.color.y * eta * transmittance;
                b += sp.color.z * eta * transmittance;
                transmittance *= 1.0 - eta;
            }
            image.at(x, y, 0) = r + settings.background.x * transmittance;
            image.at(x, y, 1) = g + settings.background.y * transmittance;
            image.at(x, y, 2) = b + settings.background.z * transmittance;
            image.a(x, y) = 1.0 - transmittance;
        }
    return image;
}

// Camera on the -z axis at `distance`, looking at the origin.
inline Camera test_camera(int width, int height, double focal, double distance = 2.4) {
    return orbit_camera(0.0, 0.0, distance, focal, width, height, 0.05);
}

// Random cloud in front of the test camera. Depths are separated by at least
// `min_depth_gap` so finite-difference steps cannot flip the blend order; the
// gap shrinks for large clouds so the rejection sampling stays feasible.
inline GaussianCloud random_cloud(Rng& rng, std::size_t n, double min_depth_gap = 0.01) {
    GaussianCloud cloud;
    cloud.resize(n);
    double gap = std::min(min_depth_gap, 0.5 / double(n));
    std::vector<double> depths;
    for (std::size_t i = 0; i < n; ++i) {
        double z;
        for (;;) {
            z = rng.uniform(-0.6, 0.6);
            bool clear = true;
            for (double d : depths)
                if (std::abs(d - z) < gap) clear = false;
            if (clear) break;
        }
        depths.push_back(z);
        cloud.positions[i] = {rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), z};
        Quat q{rng.normal(), rng.normal(), rng.normal(), rng.normal()};
        cloud.rotations[i] = q.normalized();
        double s = std::log(rng.uniform(0.05, 0.25));
        cloud.log_scales[i] = {s + rng.uniform(-0.3, 0.3), s + rng.uniform(-0.3, 0.3),
                               s + rng.uniform(-0.3, 0.3)};
        cloud.colors[i] = {rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95),
                           rng.uniform(0.05, 0.95)};
        cloud.opacity_logits[i] = rng.uniform(-1.5, 1.5);
    }
    return cloud;
}

inline ImageBuffer random_image(Rng& rng, int width, int height) {
    ImageBuffer img{width, height};
    for (auto& v : img.rgb) v = rng.uniform(0.02, 0.98);
    for (auto& v : img.alpha) v = rng.uniform(0.0, 1.0);
    return img;
}

inline RgbField random_field(Rng& rng, int width, int height, double lo = -1.0, double hi = 1.0) {
    RgbField f(width, height);
    for (auto& v : f.data) v = rng.uniform(lo, hi);
    return f;
}

}  // namespace testutil
