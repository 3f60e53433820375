#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "helpers.hpp"
#include "splatalign/errors.hpp"
#include "splatalign/image_io.hpp"
#include "splatalign/mesh_io.hpp"
#include "splatalign/ply_io.hpp"

using namespace splatalign;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const char* name) { return fs::temp_directory_path() / name; }

}  // namespace

TEST_CASE("PNG round-trips RGBA within 8-bit quantization") {
    Rng rng(1);
    ImageBuffer img = testutil::random_image(rng, 23, 17);
    auto bytes = encode_png(img, true);
    bool had_alpha = false;
    ImageBuffer back = decode_png(bytes, &had_alpha);
    CHECK(had_alpha);
    REQUIRE(back.width == 23);
    REQUIRE(back.height == 17);
    for (std::size_t i = 0; i < img.rgb.size(); ++i)
        CHECK(std::abs(back.rgb[i] - img.rgb[i]) <= 0.5 / 255.0 + 1e-9);
    for (std::size_t i = 0; i < img.alpha.size(); ++i)
        CHECK(std::abs(back.alpha[i] - img.alpha[i]) <= 0.5 / 255.0 + 1e-9);
}

TEST_CASE("PNG RGB mode drops alpha and reports it") {
    Rng rng(2);
    ImageBuffer img = testutil::random_image(rng, 9, 9);
    bool had_alpha = true;
    ImageBuffer back = decode_png(encode_png(img, false), &had_alpha);
    CHECK_FALSE(had_alpha);
    for (double a : back.alpha) CHECK(a == 1.0);
}

TEST_CASE("PNG encoding is deterministic") {
    Rng rng(3);
    ImageBuffer img = testutil::random_image(rng, 31, 15);
    CHECK(encode_png(img, true) == encode_png(img, true));
}

TEST_CASE("PNG decoder survives all scanline filters via zlib-compressed fixture") {
    // Exercise the unfiltering paths by re-encoding a gradient image, which
    // produces long runs that deflate happily regardless of filter type.
    ImageBuffer img{64, 4};
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 64; ++x) {
            img.at(x, y, 0) = x / 63.0;
            img.at(x, y, 1) = y / 3.0;
            img.at(x, y, 2) = 0.25;
            img.a(x, y) = 1.0;
        }
    ImageBuffer back = decode_png(encode_png(img, true));
    CHECK(std::abs(back.at(63, 3, 0) - 1.0) < 1e-9);
    CHECK(std::abs(back.at(0, 0, 0)) < 1e-9);
}

TEST_CASE("PNG decoder rejects non-PNG input") {
    std::vector<unsigned char> junk{1, 2, 3, 4, 5, 6, 7, 8, 9};
    CHECK_THROWS_AS(decode_png(junk), io_error);
}

TEST_CASE("base64 round-trips arbitrary bytes") {
    Rng rng(4);
    for (std::size_t len : {0u, 1u, 2u, 3u, 17u, 256u}) {
        std::vector<unsigned char> data(len);
        for (auto& b : data) b = (unsigned char)rng.uniform_index(256);
        auto text = base64_encode(data.data(), data.size());
        CHECK(base64_decode(text) == data);
    }
    CHECK(base64_encode(nullptr, 0) == "");
    CHECK_THROWS_AS(base64_decode("a!b"), io_error);
}

TEST_CASE("OBJ round-trips vertices, colors and faces") {
    TriMesh mesh;
    mesh.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0.5, 0.5, 1.25}};
    mesh.vertex_colors = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {0.25, 0.5, 0.75}};
    mesh.triangles = {{0, 1, 2}, {1, 3, 2}};
    auto path = temp_file("splatalign_mesh.obj");
    write_obj(path.string(), mesh);
    TriMesh back = read_obj(path.string());
    fs::remove(path);

    REQUIRE(back.vertices.size() == 4);
    REQUIRE(back.triangles.size() == 2);
    CHECK(back.vertices[3].z == doctest::Approx(1.25));
    CHECK(back.vertex_colors[3].y == doctest::Approx(0.5));
    CHECK(back.triangles[1][1] == 3);
}

TEST_CASE("OBJ parser handles slash forms, polygons and missing colors") {
    auto path = temp_file("splatalign_forms.obj");
    {
        std::ofstream os(path);
        os << "# comment\n"
           << "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\n"
           << "vn 0 0 1\nvt 0 0\n"
           << "f 1/1/1 2//1 3/1 4\n";  // quad, mixed index forms
    }
    TriMesh mesh = read_obj(path.string());
    fs::remove(path);
    REQUIRE(mesh.triangles.size() == 2);  // fan-triangulated quad
    CHECK(mesh.vertex_colors[0].x == doctest::Approx(0.7));

    CHECK_THROWS_AS(read_obj("/nonexistent/mesh.obj"), io_error);
}

TEST_CASE("OBJ parser rejects out-of-range faces") {
    auto path = temp_file("splatalign_bad.obj");
    {
        std::ofstream os(path);
        os << "v 0 0 0\nv 1 0 0\nf 1 2 3\n";
    }
    CHECK_THROWS_AS(read_obj(path.string()), io_error);
    fs::remove(path);
}

TEST_CASE("PLY export/import round-trips within float32 rounding") {
    Rng rng(5);
    GaussianCloud cloud = testutil::random_cloud(rng, 37);
    auto path = temp_file("splatalign_cloud.ply");
    export_ply(cloud, path.string());
    GaussianCloud back = import_ply(path.string());
    fs::remove(path);

    REQUIRE(back.size() == cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        CHECK(std::abs(back.positions[i].x - cloud.positions[i].x) < 1e-6);
        CHECK(std::abs(back.opacity_logits[i] - cloud.opacity_logits[i]) < 1e-6);
        CHECK(std::abs(back.log_scales[i].y - cloud.log_scales[i].y) < 1e-6);
        CHECK(std::abs(back.rotations[i].w - cloud.rotations[i].w) < 1e-6);
        CHECK(std::abs(back.colors[i].z - cloud.colors[i].z) < 1e-6);
    }
}

TEST_CASE("PLY: empty cloud and header counts") {
    auto path = temp_file("splatalign_empty.ply");
    export_ply(GaussianCloud{}, path.string());
    GaussianCloud back = import_ply(path.string());
    CHECK(back.size() == 0);

    Rng rng(6);
    for (std::size_t n : {1u, 5u, 113u}) {
        GaussianCloud cloud = testutil::random_cloud(rng, n);
        export_ply(cloud, path.string());
        std::ifstream is(path, std::ios::binary);
        std::string line, header;
        while (std::getline(is, line) && line != "end_header") header += line + "\n";
        CHECK(header.find("element vertex " + std::to_string(n)) != std::string::npos);
        CHECK(import_ply(path.string()).size() == n);
    }
    fs::remove(path);
}

TEST_CASE("PLY importer tolerates shuffled property order") {
    // External tools may reorder properties; the reader maps them by name.
    Rng rng(7);
    GaussianCloud cloud = testutil::random_cloud(rng, 3);
    auto path = temp_file("splatalign_shuffled.ply");
    {
        std::ofstream os(path, std::ios::binary);
        os << "ply\nformat binary_little_endian 1.0\nelement vertex 3\n";
        const char* props[] = {"f_dc_0", "f_dc_1", "f_dc_2", "x", "y", "z", "opacity",
                               "rot_0", "rot_1", "rot_2", "rot_3", "scale_0", "scale_1",
                               "scale_2"};
        for (const char* p : props) os << "property float " << p << "\n";
        os << "end_header\n";
        const double c0 = 0.28209479177387814;
        for (std::size_t i = 0; i < 3; ++i) {
            float vals[14] = {float((cloud.colors[i].x - 0.5) / c0),
                              float((cloud.colors[i].y - 0.5) / c0),
                              float((cloud.colors[i].z - 0.5) / c0),
                              float(cloud.positions[i].x), float(cloud.positions[i].y),
                              float(cloud.positions[i].z), float(cloud.opacity_logits[i]),
                              float(cloud.rotations[i].w), float(cloud.rotations[i].x),
                              float(cloud.rotations[i].y), float(cloud.rotations[i].z),
                              float(cloud.log_scales[i].x), float(cloud.log_scales[i].y),
                              float(cloud.log_scales[i].z)};
            os.write(reinterpret_cast<const char*>(vals), sizeof vals);
        }
    }
    GaussianCloud back = import_ply(path.string());
    fs::remove(path);
    REQUIRE(back.size() == 3);
    CHECK(std::abs(back.positions[1].x - cloud.positions[1].x) < 1e-6);
    CHECK(std::abs(back.colors[2].y - cloud.colors[2].y) < 1e-6);
}

TEST_CASE("PLY importer rejects missing properties and truncated data") {
    auto path = temp_file("splatalign_broken.ply");
    {
        std::ofstream os(path, std::ios::binary);
        os << "ply\nformat binary_little_endian 1.0\nelement vertex 1\n"
           << "property float x\nproperty float y\nproperty float z\nend_header\n";
        float xyz[3] = {0, 0, 0};
        os.write(reinterpret_cast<const char*>(xyz), sizeof xyz);
    }
    CHECK_THROWS_AS(import_ply(path.string()), io_error);
    fs::remove(path);
}
