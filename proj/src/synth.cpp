#include "splatalign/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>

#include "splatalign/errors.hpp"
#include "splatalign/image_io.hpp"
#include "splatalign/mesh_io.hpp"
#include "splatalign/mesh_render.hpp"
#include "splatalign/pipeline.hpp"
#include "splatalign/rng.hpp"

namespace splatalign {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Icosphere with position-keyed vertex colors.
TriMesh icosphere(int subdivisions, double radius) {
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> verts = {
        {-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
        {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
        {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1},
    };
    std::vector<std::array<int, 3>> faces = {
        {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
        {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
        {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
        {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1},
    };
    for (auto& v : verts) v = v.normalized();

    std::map<std::pair<int, int>, int> midpoints;
    auto midpoint = [&](int a, int b) {
        auto key = std::minmax(a, b);
        auto it = midpoints.find(key);
        if (it != midpoints.end()) return it->second;
        Vec3 m = ((verts[a] + verts[b]) * 0.5).normalized();
        verts.push_back(m);
        int idx = int(verts.size()) - 1;
        midpoints.emplace(key, idx);
        return idx;
    };
    for (int s = 0; s < subdivisions; ++s) {
        std::vector<std::array<int, 3>> next;
        next.reserve(faces.size() * 4);
        for (const auto& f : faces) {
            int a = midpoint(f[0], f[1]);
            int b = midpoint(f[1], f[2]);
            int c = midpoint(f[2], f[0]);
            next.push_back({f[0], a, c});
            next.push_back({f[1], b, a});
            next.push_back({f[2], c, b});
            next.push_back({a, b, c});
        }
        faces = std::move(next);
    }

    TriMesh mesh;
    mesh.vertices.reserve(verts.size());
    mesh.vertex_colors.reserve(verts.size());
    for (const auto& v : verts) {
        mesh.vertices.push_back(v * radius);
        // Smooth position-keyed texture: distinct hues per octant.
        mesh.vertex_colors.push_back({clamp01(0.5 + 0.45 * v.x), clamp01(0.5 + 0.45 * v.y),
                                      clamp01(0.5 + 0.45 * v.z)});
    }
    mesh.triangles = faces;
    return mesh;
}

// Open prism along +x acting as the limb; base near the sphere surface.
void append_limb(TriMesh& mesh, double start_x, double length, double radius) {
    const int sides = 8;
    int base = int(mesh.vertices.size());
    for (int ring = 0; ring < 2; ++ring) {
        double x = start_x + ring * length;
        for (int s = 0; s < sides; ++s) {
            double a = 2.0 * kPi * s / sides;
            mesh.vertices.push_back({x, radius * std::cos(a), radius * std::sin(a)});
            // Warm gradient along the limb, banded around the ring.
            mesh.vertex_colors.push_back({clamp01(0.9 - 0.25 * ring),
                                          clamp01(0.45 + 0.1 * std::cos(a)),
                                          clamp01(0.15 + 0.1 * std::sin(a))});
        }
    }
    for (int s = 0; s < sides; ++s) {
        int s2 = (s + 1) % sides;
        mesh.triangles.push_back({base + s, base + sides + s, base + sides + s2});
        mesh.triangles.push_back({base + s, base + sides + s2, base + s2});
    }
    // End cap.
    int tip = int(mesh.vertices.size());
    mesh.vertices.push_back({start_x + length + 0.02, 0.0, 0.0});
    mesh.vertex_colors.push_back({0.95, 0.35, 0.1});
    for (int s = 0; s < sides; ++s)
        mesh.triangles.push_back({base + sides + s, tip, base + sides + (s + 1) % sides});
}

// Rigid spin about y plus a smooth limb bend about z; the identity at t = 0.
Vec3 deform_vertex(const Vec3& v, double t, const SynthOptions& options) {
    double bend = options.bend_amplitude_rad * std::sin(kPi * t);
    double spin = options.spin_amplitude_rad * t;

    Vec3 p = v;
    double joint = options.sphere_radius * 0.8;
    if (p.x > joint) {
        // Smoothstep weight so the bend eases in over the limb.
        double w = std::min(1.0, (p.x - joint) / (0.6 * options.limb_length));
        w = w * w * (3.0 - 2.0 * w);
        double angle = bend * w;
        double c = std::cos(angle), s = std::sin(angle);
        double dx = p.x - joint;
        p = {joint + c * dx - s * p.y, s * dx + c * p.y, p.z};
    }
    double c = std::cos(spin), s = std::sin(spin);
    return {c * p.x + s * p.z, p.y, -s * p.x + c * p.z};
}

}  // namespace

SynthFixture synth_anchor(uint64_t seed, const RunConfig& config, const SynthOptions& options) {
    SynthFixture fixture;
    fixture.focal = options.focal > 0.0 ? options.focal : double(config.width);
    fixture.front_camera = make_front_camera(config, fixture.focal);

    TriMesh rest = icosphere(options.sphere_subdivisions, options.sphere_radius);
    append_limb(rest, options.sphere_radius * 0.75, options.limb_length, options.limb_radius);

    const std::size_t n_frames = std::size_t(std::max(1, config.n_frames));
    std::vector<double> times = normalized_timestamps(n_frames);

    for (std::size_t k = 0; k < n_frames; ++k) {
        TriMesh frame_mesh = rest;
        for (auto& v : frame_mesh.vertices) v = deform_vertex(v, times[k], options);
        fixture.clip.frames.push_back(
            render_mesh(frame_mesh, fixture.front_camera, config.background));
        fixture.meshes.push_back(std::move(frame_mesh));
    }
    fixture.clip.timestamps = times;

    // Ground-truth samples: fixed barycentric draws on the rest mesh, pushed
    // through the same vertex deformation per timestep.
    Rng rng = Rng(seed).fork(3);
    std::vector<double> cumulative(rest.triangles.size());
    double total = 0.0;
    for (std::size_t i = 0; i < rest.triangles.size(); ++i) {
        const auto& t = rest.triangles[i];
        total += 0.5 *
                 (rest.vertices[t[1]] - rest.vertices[t[0]])
                     .cross(rest.vertices[t[2]] - rest.vertices[t[0]])
                     .norm();
        cumulative[i] = total;
    }
    struct Sample {
        std::size_t tri;
        double b0, b1, b2;
    };
    std::vector<Sample> samples;
    for (int i = 0; i < options.gt_samples; ++i) {
        double u = rng.uniform() * total;
        std::size_t tri =
            std::lower_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin();
        if (tri >= rest.triangles.size()) tri = rest.triangles.size() - 1;
        double r1 = std::sqrt(rng.uniform()), r2 = rng.uniform();
        samples.push_back({tri, 1.0 - r1, r1 * (1.0 - r2), r1 * r2});
    }

    auto sample_cloud = [&](const TriMesh& mesh) {
        GaussianCloud cloud;
        cloud.resize(samples.size());
        for (std::size_t i = 0; i < samples.size(); ++i) {
            const auto& s = samples[i];
            const auto& t = mesh.triangles[s.tri];
            cloud.positions[i] = mesh.vertices[t[0]] * s.b0 + mesh.vertices[t[1]] * s.b1 +
                                 mesh.vertices[t[2]] * s.b2;
            Vec3 c = mesh.vertex_colors[t[0]] * s.b0 + mesh.vertex_colors[t[1]] * s.b1 +
                     mesh.vertex_colors[t[2]] * s.b2;
            cloud.colors[i] = {clamp01(c.x), clamp01(c.y), clamp01(c.z)};
            cloud.rotations[i] = Quat{};
            cloud.log_scales[i] = {std::log(0.04), std::log(0.04), std::log(0.04)};
            cloud.opacity_logits[i] = 2.0;
        }
        return cloud;
    };
    for (const auto& mesh : fixture.meshes) fixture.gt_clouds.push_back(sample_cloud(mesh));
    fixture.gt_cloud = fixture.gt_clouds.front();
    return fixture;
}

void write_fixture(const SynthFixture& fixture, const std::string& frames_dir,
                   const std::string& meshes_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(frames_dir);
    fs::create_directories(meshes_dir);
    char buf[32];
    for (std::size_t k = 0; k < fixture.clip.frames.size(); ++k) {
        std::snprintf(buf, sizeof buf, "frame_%04zu.png", k);
        write_png((fs::path(frames_dir) / buf).string(), fixture.clip.frames[k], true);
    }
    for (std::size_t k = 0; k < fixture.meshes.size(); ++k) {
        std::snprintf(buf, sizeof buf, "mesh_%04zu.obj", k);
        write_obj((fs::path(meshes_dir) / buf).string(), fixture.meshes[k]);
    }
}

}  // namespace splatalign
