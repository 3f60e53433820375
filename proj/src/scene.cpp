#include "splatalign/scene.hpp"

#include <cmath>

#include "splatalign/errors.hpp"

namespace splatalign {

Camera orbit_camera(double azimuth_rad, double elevation_rad, double radius, double focal,
                    int width, int height, double z_near) {
    // Eye position on the sphere; front view (az=0, el=0) sits on -z.
    const double ca = std::cos(azimuth_rad), sa = std::sin(azimuth_rad);
    const double ce = std::cos(elevation_rad), se = std::sin(elevation_rad);
    Vec3 eye{radius * ce * sa, -radius * se, -radius * ce * ca};

    Vec3 forward = (Vec3{} - eye).normalized();  // toward origin
    Vec3 world_up{0.0, -1.0, 0.0};               // camera y points down
    Vec3 right = world_up.cross(forward);
    if (right.norm() < 1e-9) right = Vec3{1.0, 0.0, 0.0};
    right = right.normalized();
    Vec3 down = forward.cross(right);

    Camera cam;
    cam.focal = focal;
    cam.cx = 0.5 * width;
    cam.cy = 0.5 * height;
    cam.width = width;
    cam.height = height;
    cam.z_near = z_near;
    for (int c = 0; c < 3; ++c) {
        cam.rotation(0, c) = right[c];
        cam.rotation(1, c) = down[c];
        cam.rotation(2, c) = forward[c];
    }
    cam.translation = -(cam.rotation * eye);
    return cam;
}

std::vector<std::string> validate_mesh(const TriMesh& mesh, double area_tolerance) {
    std::vector<std::string> violations;
    const int v_count = int(mesh.vertices.size());
    if (mesh.vertex_colors.size() != mesh.vertices.size())
        violations.push_back("vertex_colors: size mismatch with vertices");
    for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
        const auto& t = mesh.triangles[i];
        bool in_range = true;
        for (int k = 0; k < 3; ++k) {
            if (t[k] < 0 || t[k] >= v_count) {
                violations.push_back("triangle " + std::to_string(i) + ": index out of range");
                in_range = false;
                break;
            }
        }
        if (!in_range) continue;
        Vec3 e1 = mesh.vertices[t[1]] - mesh.vertices[t[0]];
        Vec3 e2 = mesh.vertices[t[2]] - mesh.vertices[t[0]];
        if (0.5 * e1.cross(e2).norm() <= area_tolerance)
            violations.push_back("triangle " + std::to_string(i) + ": degenerate (zero area)");
    }
    return violations;
}

std::vector<double> normalized_timestamps(std::size_t frame_count) {
    std::vector<double> ts(frame_count, 0.0);
    if (frame_count > 1) {
        for (std::size_t k = 0; k < frame_count; ++k)
            ts[k] = double(k) / double(frame_count - 1);
    }
    return ts;
}

DiffusionSchedule DiffusionSchedule::cosine(int t_max) {
    DiffusionSchedule s;
    s.t_max = t_max;
    s.alpha.resize(t_max + 1);
    s.sigma.resize(t_max + 1);
    s.weight.assign(t_max + 1, 1.0);
    const double half_pi = 1.5707963267948966;
    for (int tau = 0; tau <= t_max; ++tau) {
        double u = half_pi * double(tau) / double(t_max);
        s.alpha[tau] = std::cos(u);
        s.sigma[tau] = std::sin(u);
    }
    return s;
}

Mat3 covariance_of(const Quat& rotation, const Vec3& log_scale) {
    if (!rotation.finite() || !log_scale.finite())
        throw invalid_parameter_error("covariance_of: non-finite input");
    Mat3 r = rotation_matrix(rotation.normalized());
    Vec3 d{std::exp(2.0 * log_scale.x), std::exp(2.0 * log_scale.y),
           std::exp(2.0 * log_scale.z)};
    if (!d.finite()) throw invalid_parameter_error("covariance_of: log_scale overflow");
    Mat3 out = Mat3::zero();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) out(i, j) += r(i, k) * d[k] * r(j, k);
    return out;
}

std::vector<std::string> validate_cloud(const GaussianCloud& cloud) {
    std::vector<std::string> violations;
    const std::size_t n = cloud.positions.size();
    if (cloud.rotations.size() != n || cloud.log_scales.size() != n ||
        cloud.colors.size() != n || cloud.opacity_logits.size() != n) {
        violations.push_back("cloud: field sizes disagree");
        return violations;
    }
    for (std::size_t i = 0; i < n; ++i) {
        const std::string idx = std::to_string(i);
        if (!cloud.positions[i].finite())
            violations.push_back("point " + idx + ": positions not finite");
        if (!cloud.rotations[i].finite())
            violations.push_back("point " + idx + ": rotations not finite");
        else if (std::abs(cloud.rotations[i].norm() - 1.0) > 1e-6)
            violations.push_back("point " + idx + ": rotations not unit-norm");
        if (!cloud.log_scales[i].finite())
            violations.push_back("point " + idx + ": log_scales not finite");
        else {
            Vec3 s{std::exp(cloud.log_scales[i].x), std::exp(cloud.log_scales[i].y),
                   std::exp(cloud.log_scales[i].z)};
            if (!s.finite() || s.x <= 0.0 || s.y <= 0.0 || s.z <= 0.0)
                violations.push_back("point " + idx + ": log_scales out of range");
        }
        if (!cloud.colors[i].finite())
            violations.push_back("point " + idx + ": colors not finite");
        if (!std::isfinite(cloud.opacity_logits[i]))
            violations.push_back("point " + idx + ": opacity_logits not finite");
    }
    return violations;
}

}  // namespace splatalign
