#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"
#include "splatalign/mesh_render.hpp"

using namespace splatalign;
using testutil::test_camera;

namespace {

TriMesh single_triangle(const Vec3& color) {
    TriMesh mesh;
    mesh.vertices = {{-0.5, -0.4, 0.0}, {0.5, -0.4, 0.0}, {0.0, 0.6, 0.0}};
    mesh.triangles = {{0, 1, 2}};
    mesh.vertex_colors = {color, color, color};
    return mesh;
}

}  // namespace

TEST_CASE("one triangle covers the principal point") {
    Camera cam = test_camera(33, 33, 40.0);
    ImageBuffer img = render_mesh(single_triangle({1, 0, 0}), cam, {0, 0, 0});
    CHECK(img.at(16, 16, 0) == doctest::Approx(1.0));
    CHECK(img.at(16, 16, 1) == doctest::Approx(0.0));
    CHECK(img.a(16, 16) == 1.0);
    CHECK(img.a(0, 0) == 0.0);
}

TEST_CASE("empty mesh renders the background everywhere") {
    Camera cam = test_camera(8, 6, 10.0);
    ImageBuffer img = render_mesh(TriMesh{}, cam, {0.2, 0.4, 0.6});
    for (int y = 0; y < 6; ++y)
        for (int x = 0; x < 8; ++x) {
            CHECK(img.at(x, y, 1) == doctest::Approx(0.4));
            CHECK(img.a(x, y) == 0.0);
        }
}

TEST_CASE("nearer of two overlapping triangles wins") {
    // Same footprint, different depths: the z-buffer must keep the red one.
    TriMesh mesh = single_triangle({1, 0, 0});
    TriMesh far_tri = single_triangle({0, 1, 0});
    for (auto& v : far_tri.vertices) v.z += 1.0;  // pushed away from the camera
    int base = int(mesh.vertices.size());
    mesh.vertices.insert(mesh.vertices.end(), far_tri.vertices.begin(), far_tri.vertices.end());
    mesh.vertex_colors.insert(mesh.vertex_colors.end(), far_tri.vertex_colors.begin(),
                              far_tri.vertex_colors.end());
    mesh.triangles.push_back({base + 0, base + 1, base + 2});

    Camera cam = test_camera(3, 3, 3.0);  // 3-pixel-wide probe scene
    ImageBuffer img = render_mesh(mesh, cam, {0, 0, 0});
    CHECK(img.at(1, 1, 0) == doctest::Approx(1.0));
    CHECK(img.at(1, 1, 1) == doctest::Approx(0.0));

    // Triangle submission order must not matter.
    std::swap(mesh.triangles[0], mesh.triangles[1]);
    ImageBuffer swapped = render_mesh(mesh, cam, {0, 0, 0});
    CHECK(swapped.at(1, 1, 0) == doctest::Approx(1.0));
}

TEST_CASE("barycentric color interpolation mixes vertex colors") {
    TriMesh mesh = single_triangle({0, 0, 0});
    mesh.vertex_colors = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    Camera cam = test_camera(65, 65, 70.0);
    ImageBuffer img = render_mesh(mesh, cam, {0, 0, 0});
    // The covered centroid mixes all three colors.
    double cx = 0, cy = 0;
    int count = 0;
    for (int y = 0; y < 65; ++y)
        for (int x = 0; x < 65; ++x)
            if (img.a(x, y) > 0) {
                cx += x;
                cy += y;
                ++count;
            }
    REQUIRE(count > 0);
    int mx = int(cx / count), my = int(cy / count);
    CHECK(img.at(mx, my, 0) > 0.1);
    CHECK(img.at(mx, my, 1) > 0.1);
    CHECK(img.at(mx, my, 2) > 0.1);
}

TEST_CASE("triangles behind the near plane are dropped, not smeared") {
    TriMesh mesh = single_triangle({1, 1, 1});
    for (auto& v : mesh.vertices) v.z -= 5.0;  // fully behind the camera
    Camera cam = test_camera(16, 16, 16.0);
    ImageBuffer img = render_mesh(mesh, cam, {0, 0, 0});
    for (std::size_t i = 0; i < img.alpha.size(); ++i) CHECK(img.alpha[i] == 0.0);
}
