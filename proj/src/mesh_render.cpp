#include "splatalign/mesh_render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "splatalign/errors.hpp"

namespace splatalign {

ImageBuffer render_mesh(const TriMesh& mesh, const Camera& camera, const Vec3& background) {
    if (camera.width <= 0 || camera.height <= 0 || camera.focal <= 0.0)
        throw invalid_parameter_error("render_mesh: invalid camera");

    ImageBuffer image(camera.width, camera.height);
    for (int y = 0; y < camera.height; ++y)
        for (int x = 0; x < camera.width; ++x) {
            image.at(x, y, 0) = background.x;
            image.at(x, y, 1) = background.y;
            image.at(x, y, 2) = background.z;
        }
    if (mesh.empty()) return image;
    if (mesh.vertex_colors.size() != mesh.vertices.size())
        throw invalid_parameter_error("render_mesh: vertex_colors size mismatch");

    std::vector<double> zbuf(image.pixel_count(), std::numeric_limits<double>::infinity());

    for (const auto& tri : mesh.triangles) {
        Vec3 pc[3];
        Vec2 scr[3];
        bool behind = false;
        for (int k = 0; k < 3; ++k) {
            if (tri[k] < 0 || tri[k] >= int(mesh.vertices.size()))
                throw invalid_parameter_error("render_mesh: triangle index out of range");
            pc[k] = camera.to_camera(mesh.vertices[tri[k]]);
            if (pc[k].z < camera.z_near) {
                behind = true;  // no clipping at desk scale; drop the triangle
                break;
            }
            scr[k] = {camera.focal * pc[k].x / pc[k].z + camera.cx,
                      camera.focal * pc[k].y / pc[k].z + camera.cy};
        }
        if (behind) continue;

        double area = (scr[1].x - scr[0].x) * (scr[2].y - scr[0].y) -
                      (scr[1].y - scr[0].y) * (scr[2].x - scr[0].x);
        if (std::abs(area) < 1e-12) continue;
        double inv_area = 1.0 / area;

        int x0 = std::max(0, int(std::floor(std::min({scr[0].x, scr[1].x, scr[2].x}) - 0.5)));
        int x1 = std::min(camera.width - 1,
                          int(std::ceil(std::max({scr[0].x, scr[1].x, scr[2].x}) + 0.5)));
        int y0 = std::max(0, int(std::floor(std::min({scr[0].y, scr[1].y, scr[2].y}) - 0.5)));
        int y1 = std::min(camera.height - 1,
                          int(std::ceil(std::max({scr[0].y, scr[1].y, scr[2].y}) + 0.5)));

        const Vec3& c0 = mesh.vertex_colors[tri[0]];
        const Vec3& c1 = mesh.vertex_colors[tri[1]];
        const Vec3& c2 = mesh.vertex_colors[tri[2]];
        double iz0 = 1.0 / pc[0].z, iz1 = 1.0 / pc[1].z, iz2 = 1.0 / pc[2].z;

        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                double px = x + 0.5, py = y + 0.5;
                double w0 = ((scr[1].x - px) * (scr[2].y - py) -
                             (scr[1].y - py) * (scr[2].x - px)) *
                            inv_area;
                double w1 = ((scr[2].x - px) * (scr[0].y - py) -
                             (scr[2].y - py) * (scr[0].x - px)) *
                            inv_area;
                double w2 = 1.0 - w0 - w1;
                if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0) continue;

                // Perspective-correct interpolation via 1/z.
                double inv_z = w0 * iz0 + w1 * iz1 + w2 * iz2;
                double z = 1.0 / inv_z;
                std::size_t pix = std::size_t(y) * camera.width + x;
                if (z >= zbuf[pix]) continue;
                zbuf[pix] = z;

                double b0 = w0 * iz0 * z, b1 = w1 * iz1 * z, b2 = w2 * iz2 * z;
                image.at(x, y, 0) = clamp01(b0 * c0.x + b1 * c1.x + b2 * c2.x);
                image.at(x, y, 1) = clamp01(b0 * c0.y + b1 * c1.y + b2 * c2.y);
                image.at(x, y, 2) = clamp01(b0 * c0.z + b1 * c1.z + b2 * c2.z);
                image.a(x, y) = 1.0;
            }
        }
    }
    return image;
}

}  // namespace splatalign
