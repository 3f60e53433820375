#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "splatalign/errors.hpp"
#include "splatalign/render.hpp"

using namespace splatalign;
using testutil::naive_render;
using testutil::random_cloud;
using testutil::rel_err;
using testutil::test_camera;

namespace {

// Scalar probe F = <upstream, render(cloud)>; its gradient is exactly what
// render_backward returns, and it is cheap to finite-difference. Quaternions
// are renormalized before rendering: the backward differentiates through the
// normalization, so the probe must evaluate the same composed function.
double probe(const GaussianCloud& cloud, const Camera& cam, const RgbField& up_rgb,
             const ScalarField& up_alpha, const RenderSettings& settings) {
    GaussianCloud normalized = cloud;
    for (auto& q : normalized.rotations) q = q.normalized();
    ImageBuffer img = render(normalized, cam, settings);
    double s = 0.0;
    for (std::size_t i = 0; i < img.rgb.size(); ++i) s += img.rgb[i] * up_rgb.data[i];
    for (std::size_t i = 0; i < img.alpha.size(); ++i) s += img.alpha[i] * up_alpha.data[i];
    return s;
}

struct FdStats {
    double worst = 0.0;
    int checked = 0;
};

void fd_check_param(double* param, double analytic, const GaussianCloud& cloud,
                    const Camera& cam, const RgbField& up_rgb, const ScalarField& up_alpha,
                    const RenderSettings& settings, FdStats& stats, double step = 1e-4) {
    double saved = *param;
    *param = saved + step;
    double hi = probe(cloud, cam, up_rgb, up_alpha, settings);
    *param = saved - step;
    double lo = probe(cloud, cam, up_rgb, up_alpha, settings);
    *param = saved;
    double fd = (hi - lo) / (2.0 * step);
    stats.worst = std::max(stats.worst, rel_err(fd, analytic, 1e-4));
    stats.checked += 1;
}

}  // namespace

TEST_CASE("project_gaussian centers points on the optical axis") {
    Camera cam = test_camera(64, 64, 80.0);
    Mat3 cov = covariance_of(Quat{}, Vec3{std::log(0.1), std::log(0.2), std::log(0.15)});
    auto splat = project_gaussian(Vec3{0, 0, 0}, cov, cam);
    REQUIRE(splat.has_value());
    CHECK(splat->mean.x == doctest::Approx(cam.cx).epsilon(1e-9));
    CHECK(splat->mean.y == doctest::Approx(cam.cy).epsilon(1e-9));
    CHECK(splat->depth == doctest::Approx(2.4));
}

TEST_CASE("project_gaussian matches the pinhole Jacobian for isotropic covariances") {
    // sigma << depth: the projected covariance approaches (f sigma / d)^2 I.
    const double sigma = 0.01, depth = 2.4, focal = 80.0;
    Camera cam = test_camera(64, 64, focal, depth);
    RenderSettings settings;
    settings.conic_dilation = 0.0;  // compare against the undilated footprint
    Mat3 cov = covariance_of(Quat{}, Vec3{std::log(sigma), std::log(sigma), std::log(sigma)});
    auto splat = project_gaussian(Vec3{0, 0, 0}, cov, cam, settings);
    REQUIRE(splat.has_value());

    double expected = focal * sigma / depth;
    // conic = inverse covariance; eigenvalues of the projection ~ expected^2.
    double det = splat->conic_a * splat->conic_c - splat->conic_b * splat->conic_b;
    double cov_xx = splat->conic_c / det, cov_yy = splat->conic_a / det;
    CHECK(rel_err(cov_xx, expected * expected) < 0.01);
    CHECK(rel_err(cov_yy, expected * expected) < 0.01);
    CHECK(std::abs(splat->conic_b / det) < 1e-6);
}

TEST_CASE("project_gaussian culls points behind the near plane") {
    Camera cam = test_camera(64, 64, 80.0);
    Mat3 cov = covariance_of(Quat{}, Vec3{});
    CHECK_FALSE(project_gaussian(Vec3{0, 0, -2.4 + 0.01}, cov, cam).has_value());
    CHECK(project_gaussian(Vec3{0, 0, 0}, cov, cam).has_value());
}

TEST_CASE("render: empty cloud gives background and zero alpha") {
    RenderSettings settings;
    settings.background = {0.25, 0.5, 0.75};
    Camera cam = test_camera(16, 12, 20.0);
    ImageBuffer img = render(GaussianCloud{}, cam, settings);
    for (int y = 0; y < 12; ++y)
        for (int x = 0; x < 16; ++x) {
            CHECK(img.at(x, y, 0) == doctest::Approx(0.25));
            CHECK(img.at(x, y, 2) == doctest::Approx(0.75));
            CHECK(img.a(x, y) == 0.0);
        }
}

TEST_CASE("render: single centered Gaussian hits its pixel with alpha*color") {
    // Center of pixel (8, 8) on a 17x17 canvas is the principal point.
    Camera cam = test_camera(17, 17, 40.0);
    GaussianCloud cloud;
    cloud.resize(1);
    cloud.positions[0] = {0, 0, 0};
    cloud.rotations[0] = Quat{};
    cloud.log_scales[0] = {std::log(0.05), std::log(0.05), std::log(0.05)};
    cloud.colors[0] = {1.0, 0.0, 0.0};
    cloud.opacity_logits[0] = std::log(0.9 / 0.1);  // alpha = 0.9

    ImageBuffer img = render(cloud, cam, RenderSettings{});
    CHECK(std::abs(img.at(8, 8, 0) - 0.9) < 1e-5);
    CHECK(std::abs(img.at(8, 8, 1)) < 1e-5);
    CHECK(std::abs(img.a(8, 8) - 0.9) < 1e-5);
}

TEST_CASE("render equals the brute-force blend oracle on random scenes") {
    Rng rng(2024);
    for (int trial = 0; trial < 25; ++trial) {
        int w = 8 + int(rng.uniform_index(41));
        int h = 8 + int(rng.uniform_index(41));
        std::size_t n = 1 + rng.uniform_index(64);
        GaussianCloud cloud = random_cloud(rng, n);
        Camera cam = test_camera(w, h, 0.9 * w);
        RenderSettings settings;
        settings.background = {rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1)};

        ImageBuffer tiled = render(cloud, cam, settings);
        ImageBuffer naive = naive_render(cloud, cam, settings);
        double worst = 0.0;
        for (std::size_t i = 0; i < tiled.rgb.size(); ++i)
            worst = std::max(worst, std::abs(tiled.rgb[i] - naive.rgb[i]));
        for (std::size_t i = 0; i < tiled.alpha.size(); ++i)
            worst = std::max(worst, std::abs(tiled.alpha[i] - naive.alpha[i]));
        CHECK(worst <= 1e-6);
    }
}

TEST_CASE("render is deterministic across thread counts") {
    Rng rng(5);
    GaussianCloud cloud = random_cloud(rng, 40);
    Camera cam = test_camera(48, 40, 50.0);
    RenderSettings serial;
    serial.threads = 1;
    RenderSettings parallel = serial;
    parallel.threads = 4;
    ImageBuffer a = render(cloud, cam, serial);
    ImageBuffer b = render(cloud, cam, parallel);
    CHECK(a.rgb == b.rgb);
    CHECK(a.alpha == b.alpha);

    RgbField up_rgb = testutil::random_field(rng, 48, 40);
    ScalarField up_alpha(48, 40);
    for (auto& v : up_alpha.data) v = rng.uniform(-1, 1);
    RenderGrads ga = render_backward(cloud, cam, up_rgb, up_alpha, serial);
    RenderGrads gb = render_backward(cloud, cam, up_rgb, up_alpha, parallel);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        CHECK(ga.positions[i].x == gb.positions[i].x);
        CHECK(ga.rotations[i] == gb.rotations[i]);
        CHECK(ga.opacity_logits[i] == gb.opacity_logits[i]);
    }
}

TEST_CASE("alpha accumulation is monotone in the number of Gaussians") {
    Rng rng(11);
    GaussianCloud cloud = random_cloud(rng, 24);
    Camera cam = test_camera(32, 32, 30.0);
    ImageBuffer prev = render(GaussianCloud{}, cam, RenderSettings{});
    for (std::size_t keep = 1; keep <= cloud.size(); keep += 5) {
        GaussianCloud subset = cloud;
        subset.resize(keep);
        ImageBuffer cur = render(subset, cam, RenderSettings{});
        for (std::size_t i = 0; i < cur.alpha.size(); ++i)
            CHECK(cur.alpha[i] >= prev.alpha[i] - 1e-12);
        prev = cur;
    }
}

TEST_CASE("color homogeneity over a black background") {
    Rng rng(13);
    GaussianCloud cloud = random_cloud(rng, 12);
    Camera cam = test_camera(24, 24, 25.0);
    RenderSettings settings;  // black background
    ImageBuffer base = render(cloud, cam, settings);

    const double k = 0.47;
    GaussianCloud scaled = cloud;
    for (auto& c : scaled.colors) c = c * k;
    ImageBuffer scaled_img = render(scaled, cam, settings);
    for (std::size_t i = 0; i < base.rgb.size(); ++i)
        CHECK(std::abs(scaled_img.rgb[i] - k * base.rgb[i]) < 1e-6);
}

TEST_CASE("render_backward: zero upstream gives zero gradients") {
    Rng rng(17);
    GaussianCloud cloud = random_cloud(rng, 10);
    Camera cam = test_camera(24, 24, 25.0);
    RenderGrads grads = render_backward(cloud, cam, RgbField(24, 24), ScalarField(24, 24));
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        CHECK(grads.positions[i].norm() == 0.0);
        CHECK(grads.colors[i].norm() == 0.0);
        CHECK(grads.opacity_logits[i] == 0.0);
    }
}

TEST_CASE("render_backward: gradients vanish for splats without coverage") {
    // One splat inside the view, one far outside any pixel's 3-sigma support.
    Camera cam = test_camera(24, 24, 25.0);
    GaussianCloud cloud;
    cloud.resize(2);
    cloud.positions[0] = {0, 0, 0};
    cloud.positions[1] = {50.0, 50.0, 0.5};  // projects far off-canvas
    for (int i = 0; i < 2; ++i) {
        cloud.rotations[i] = Quat{};
        cloud.log_scales[i] = {std::log(0.08), std::log(0.08), std::log(0.08)};
        cloud.colors[i] = {0.5, 0.4, 0.3};
        cloud.opacity_logits[i] = 0.5;
    }
    Rng rng(23);
    RgbField up_rgb = testutil::random_field(rng, 24, 24);
    ScalarField up_alpha(24, 24);
    for (auto& v : up_alpha.data) v = rng.uniform(-1, 1);
    RenderGrads grads = render_backward(cloud, cam, up_rgb, up_alpha);
    CHECK(grads.positions[0].norm() > 0.0);
    CHECK(grads.positions[1].norm() <= 1e-9);
    CHECK(std::abs(grads.opacity_logits[1]) <= 1e-9);
}

TEST_CASE("render_backward rejects mismatched upstream shapes") {
    Rng rng(29);
    GaussianCloud cloud = random_cloud(rng, 4);
    Camera cam = test_camera(24, 24, 25.0);
    CHECK_THROWS_AS(render_backward(cloud, cam, RgbField(23, 24), ScalarField(24, 24)),
                    invalid_parameter_error);
}

TEST_CASE("render rejects an invalid cloud") {
    GaussianCloud cloud;
    cloud.resize(1);
    cloud.rotations[0] = Quat{0.8, 0, 0, 0};
    Camera cam = test_camera(8, 8, 10.0);
    CHECK_THROWS_AS(render(cloud, cam, RenderSettings{}), invalid_parameter_error);
}

TEST_CASE("render_backward matches central finite differences") {
    // Differentiability instances run with a wider footprint: finite
    // differences across the support boundary measure the truncation jump,
    // not the derivative. A 6-sigma support pushes that jump below 1e-7.
    RenderSettings settings;
    settings.cutoff_sigma = 6.0;
    settings.background = {0.1, 0.2, 0.3};

    Rng rng(314159);
    FdStats stats;
    for (int trial = 0; trial < 4; ++trial) {
        std::size_t n = 3 + rng.uniform_index(6);
        GaussianCloud cloud = random_cloud(rng, n);
        Camera cam = test_camera(24, 24, 25.0);
        RgbField up_rgb = testutil::random_field(rng, 24, 24);
        ScalarField up_alpha(24, 24);
        for (auto& v : up_alpha.data) v = rng.uniform(-1, 1);

        RenderGrads grads = render_backward(cloud, cam, up_rgb, up_alpha, settings);
        REQUIRE(grads.finite());

        for (std::size_t i = 0; i < n; ++i) {
            auto check = [&](double* p, double analytic) {
                fd_check_param(p, analytic, cloud, cam, up_rgb, up_alpha, settings, stats);
            };
            check(&cloud.positions[i].x, grads.positions[i].x);
            check(&cloud.positions[i].y, grads.positions[i].y);
            check(&cloud.positions[i].z, grads.positions[i].z);
            check(&cloud.rotations[i].w, grads.rotations[i][0]);
            check(&cloud.rotations[i].x, grads.rotations[i][1]);
            check(&cloud.rotations[i].y, grads.rotations[i][2]);
            check(&cloud.rotations[i].z, grads.rotations[i][3]);
            check(&cloud.log_scales[i].x, grads.log_scales[i].x);
            check(&cloud.log_scales[i].y, grads.log_scales[i].y);
            check(&cloud.log_scales[i].z, grads.log_scales[i].z);
            check(&cloud.colors[i].x, grads.colors[i].x);
            check(&cloud.colors[i].y, grads.colors[i].y);
            check(&cloud.colors[i].z, grads.colors[i].z);
            check(&cloud.opacity_logits[i], grads.opacity_logits[i]);
        }
    }
    INFO("worst relative error ", stats.worst, " over ", stats.checked, " coordinates");
    CHECK(stats.worst < 1e-3);
}
