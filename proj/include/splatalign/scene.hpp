#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "splatalign/math.hpp"

namespace splatalign {

// Collection of anisotropic Gaussians. Scales are stored as logarithms and
// opacities as logits so unconstrained optimizer steps cannot leave the valid
// domain; quaternions are kept unit-norm by renormalizing after each update.
struct GaussianCloud {
    std::vector<Vec3> positions;
    std::vector<Quat> rotations;
    std::vector<Vec3> log_scales;
    std::vector<Vec3> colors;  // flat RGB in [0,1], clamped at render time
    std::vector<double> opacity_logits;

    std::size_t size() const { return positions.size(); }
    void resize(std::size_t n) {
        positions.resize(n);
        rotations.resize(n);
        log_scales.resize(n);
        colors.resize(n);
        opacity_logits.resize(n);
    }
};

// Pinhole camera. `rotation`/`translation` map world points into camera
// coordinates (x right, y down, z forward); image x = focal*Xc/Zc + cx.
struct Camera {
    double focal = 0.0;  // pixels
    double cx = 0.0, cy = 0.0;
    int width = 0, height = 0;
    Mat3 rotation;     // world-to-camera, orthonormal
    Vec3 translation;  // scene units
    double z_near = 0.01;

    Vec3 to_camera(const Vec3& p) const { return rotation * p + translation; }
};

// Camera on a sphere around the origin, looking at the origin. Azimuth 0,
// elevation 0 places it on the -z axis (the front view).
Camera orbit_camera(double azimuth_rad, double elevation_rad, double radius, double focal,
                    int width, int height, double z_near = 0.01);

struct TriMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;
    std::vector<Vec3> vertex_colors;  // RGB in [0,1]

    bool empty() const { return triangles.empty(); }
};

// Returns human-readable violations; empty when the mesh is well-formed.
std::vector<std::string> validate_mesh(const TriMesh& mesh, double area_tolerance = 1e-12);

struct ImageBuffer {
    int width = 0, height = 0;
    std::vector<double> rgb;    // row-major, 3 per pixel
    std::vector<double> alpha;  // row-major, 1 per pixel

    ImageBuffer() = default;
    ImageBuffer(int w, int h) : width(w), height(h), rgb(3u * w * h, 0.0), alpha(1u * w * h, 0.0) {}

    double& at(int x, int y, int c) { return rgb[3 * (std::size_t(y) * width + x) + c]; }
    double at(int x, int y, int c) const { return rgb[3 * (std::size_t(y) * width + x) + c]; }
    double& a(int x, int y) { return alpha[std::size_t(y) * width + x]; }
    double a(int x, int y) const { return alpha[std::size_t(y) * width + x]; }
    std::size_t pixel_count() const { return std::size_t(width) * height; }
    bool same_shape(const ImageBuffer& o) const { return width == o.width && height == o.height; }
};

// Unconstrained H x W x 3 grid: noise draws, latents, per-pixel RGB gradients.
struct RgbField {
    int width = 0, height = 0;
    std::vector<double> data;

    RgbField() = default;
    RgbField(int w, int h) : width(w), height(h), data(3u * w * h, 0.0) {}
    static RgbField from_rgb(const ImageBuffer& img) {
        RgbField f(img.width, img.height);
        f.data = img.rgb;
        return f;
    }

    double& at(int x, int y, int c) { return data[3 * (std::size_t(y) * width + x) + c]; }
    double at(int x, int y, int c) const { return data[3 * (std::size_t(y) * width + x) + c]; }
    bool same_shape(const RgbField& o) const { return width == o.width && height == o.height; }
    RgbField& operator+=(const RgbField& o) {
        for (std::size_t i = 0; i < data.size(); ++i) data[i] += o.data[i];
        return *this;
    }
    RgbField& operator*=(double s) {
        for (auto& v : data) v *= s;
        return *this;
    }
};

struct ScalarField {
    int width = 0, height = 0;
    std::vector<double> data;

    ScalarField() = default;
    ScalarField(int w, int h) : width(w), height(h), data(std::size_t(w) * h, 0.0) {}
    double& at(int x, int y) { return data[std::size_t(y) * width + x]; }
    double at(int x, int y) const { return data[std::size_t(y) * width + x]; }
};

struct VideoClip {
    std::vector<ImageBuffer> frames;
    std::vector<double> timestamps;  // normalized to [0,1]

    std::size_t frame_count() const { return frames.size(); }
};

// Frame index -> normalized time; a single frame sits at t = 0.
std::vector<double> normalized_timestamps(std::size_t frame_count);

// Variance-preserving schedule: alpha^2 + sigma^2 = 1 at every timestep.
struct DiffusionSchedule {
    int t_max = 0;
    std::vector<double> alpha;   // indexed 0..t_max
    std::vector<double> sigma;
    std::vector<double> weight;  // w(tau) > 0

    static DiffusionSchedule cosine(int t_max = 1000);
    bool valid_tau(int tau) const { return tau >= 1 && tau <= t_max; }
};

// Sigma = R diag(exp(2 s)) R^T for unit quaternion `rotation` and per-axis
// log-scales. Throws invalid_parameter_error on non-finite input.
Mat3 covariance_of(const Quat& rotation, const Vec3& log_scale);

// Reports every invariant violation with point index and field name; an empty
// result means the cloud is valid.
std::vector<std::string> validate_cloud(const GaussianCloud& cloud);

inline double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

}  // namespace splatalign
