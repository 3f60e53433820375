#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "splatalign/errors.hpp"
#include "splatalign/losses.hpp"

using namespace splatalign;
using testutil::random_image;

namespace {

// FD over every rgb (and optionally alpha) entry of `a`.
template <typename LossFn>
double fd_worst(ImageBuffer& a, const ImageGrad& grad, LossFn&& loss, bool check_alpha) {
    double worst = 0.0;
    auto probe = [&] { return loss(a); };
    for (std::size_t i = 0; i < a.rgb.size(); ++i)
        worst = std::max(worst, testutil::fd_rel_err(probe, &a.rgb[i], grad.rgb.data[i]));
    if (check_alpha)
        for (std::size_t i = 0; i < a.alpha.size(); ++i)
            worst = std::max(worst, testutil::fd_rel_err(probe, &a.alpha[i], grad.alpha.data[i]));
    return worst;
}

}  // namespace

TEST_CASE("mse_loss: identical, constant and random cases") {
    Rng rng(1);
    ImageBuffer a = random_image(rng, 6, 5);
    LossValue at_min = mse_loss(a, a);
    CHECK(at_min.value == 0.0);
    for (double g : at_min.grads[0].rgb.data) CHECK(g == 0.0);

    ImageBuffer ones{2, 2}, zeros{2, 2};
    for (auto& v : ones.rgb) v = 1.0;
    CHECK(mse_loss(ones, zeros).value == doctest::Approx(1.0));

    ImageBuffer b = random_image(rng, 6, 5);
    LossValue loss = mse_loss(a, b);
    CHECK(loss.value >= 0.0);
    double worst = fd_worst(a, loss.grads[0], [&](ImageBuffer& img) {
        return mse_loss(img, b).value;
    }, false);
    CHECK(worst < 1e-4);
}

TEST_CASE("mse_loss rejects dimension mismatches") {
    ImageBuffer a{4, 4}, b{4, 5};
    CHECK_THROWS_AS(mse_loss(a, b), invalid_parameter_error);
}

TEST_CASE("mask_loss: matching, opposite and random alphas") {
    Rng rng(2);
    ImageBuffer a = random_image(rng, 5, 4);
    CHECK(mask_loss(a, a).value == 0.0);

    ImageBuffer full{3, 3}, empty{3, 3};
    for (auto& v : full.alpha) v = 1.0;
    CHECK(mask_loss(full, empty).value == doctest::Approx(1.0));

    ImageBuffer b = random_image(rng, 5, 4);
    LossValue loss = mask_loss(a, b);
    double worst = 0.0;
    auto probe = [&] { return mask_loss(a, b).value; };
    for (std::size_t i = 0; i < a.alpha.size(); ++i)
        worst = std::max(worst,
                         testutil::fd_rel_err(probe, &a.alpha[i], loss.grads[0].alpha.data[i]));
    CHECK(worst < 1e-4);
    for (double g : loss.grads[0].rgb.data) CHECK(g == 0.0);
}

TEST_CASE("perceptual_loss: zero at identity, symmetric, sized stack") {
    Rng rng(3);
    FeatureStack stack(99);
    ImageBuffer a = random_image(rng, 16, 16);
    CHECK(perceptual_loss(a, a, stack).value == doctest::Approx(0.0));

    ImageBuffer b = random_image(rng, 16, 16);
    CHECK(perceptual_loss(a, b, stack).value ==
          doctest::Approx(perceptual_loss(b, a, stack).value));

    ImageBuffer tiny{4, 4};
    CHECK_THROWS_AS(perceptual_loss(tiny, tiny, stack), invalid_parameter_error);
}

TEST_CASE("perceptual_loss is deterministic per seed and differs across seeds") {
    Rng rng(4);
    ImageBuffer a = random_image(rng, 12, 12);
    ImageBuffer b = random_image(rng, 12, 12);
    CHECK(perceptual_loss(a, b, FeatureStack(5)).value ==
          perceptual_loss(a, b, FeatureStack(5)).value);
    CHECK(perceptual_loss(a, b, FeatureStack(5)).value !=
          perceptual_loss(a, b, FeatureStack(6)).value);
}

TEST_CASE("perceptual_loss gradient matches finite differences") {
    Rng rng(5);
    FeatureStack stack(17);
    ImageBuffer a = random_image(rng, 16, 16);
    ImageBuffer b = random_image(rng, 16, 16);
    LossValue loss = perceptual_loss(a, b, stack);
    double worst = fd_worst(a, loss.grads[0], [&](ImageBuffer& img) {
        return perceptual_loss(img, b, stack).value;
    }, false);
    INFO("worst relative error ", worst);
    CHECK(worst < 1e-3);
}

TEST_CASE("texture_alignment composes its three constituents exactly") {
    Rng rng(6);
    FeatureStack stack(17);
    ImageBuffer x = random_image(rng, 12, 10);
    ImageBuffer anchor = random_image(rng, 12, 10);

    const double lambda = 0.37;
    LossValue ta = texture_alignment(x, anchor, lambda, stack);
    double expected = mse_loss(x, anchor).value + mask_loss(x, anchor).value +
                      lambda * perceptual_loss(x, anchor, stack).value;
    CHECK(ta.value == doctest::Approx(expected).epsilon(1e-12));

    // lambda = 0 with identical inputs is exactly zero.
    CHECK(texture_alignment(x, x, 0.0, stack).value == 0.0);
}

TEST_CASE("texture_alignment gradient matches finite differences") {
    Rng rng(7);
    FeatureStack stack(23);
    ImageBuffer x = random_image(rng, 12, 12);
    ImageBuffer anchor = random_image(rng, 12, 12);
    LossValue ta = texture_alignment(x, anchor, 0.2, stack);
    double worst = fd_worst(x, ta.grads[0], [&](ImageBuffer& img) {
        return texture_alignment(img, anchor, 0.2, stack).value;
    }, true);
    INFO("worst relative error ", worst);
    CHECK(worst < 1e-3);
}

TEST_CASE("geometry_alignment sums per-view texture alignments in order") {
    Rng rng(8);
    FeatureStack stack(31);
    std::vector<ImageBuffer> gauss, mesh;
    for (int v = 0; v < 3; ++v) {
        gauss.push_back(random_image(rng, 10, 10));
        mesh.push_back(random_image(rng, 10, 10));
    }
    LossValue ga = geometry_alignment(gauss, mesh, 0.1, stack);
    REQUIRE(ga.grads.size() == 3);
    double expected = 0.0;
    for (int v = 0; v < 3; ++v) expected += texture_alignment(gauss[v], mesh[v], 0.1, stack).value;
    CHECK(ga.value == doctest::Approx(expected).epsilon(1e-12));

    // Identical pairs: zero. Single view: reduces to texture_alignment.
    CHECK(geometry_alignment(gauss, gauss, 0.1, stack).value == 0.0);
    LossValue single = geometry_alignment({gauss[0]}, {mesh[0]}, 0.1, stack);
    CHECK(single.value == doctest::Approx(texture_alignment(gauss[0], mesh[0], 0.1, stack).value));

    CHECK_THROWS_AS(geometry_alignment(gauss, {mesh[0]}, 0.1, stack), invalid_parameter_error);
}

TEST_CASE("geometry_alignment is permutation-equivariant") {
    Rng rng(9);
    FeatureStack stack(37);
    std::vector<ImageBuffer> gauss, mesh;
    for (int v = 0; v < 4; ++v) {
        gauss.push_back(random_image(rng, 9, 9));
        mesh.push_back(random_image(rng, 9, 9));
    }
    LossValue base = geometry_alignment(gauss, mesh, 0.15, stack);

    std::vector<int> perm{2, 0, 3, 1};
    std::vector<ImageBuffer> gauss_p, mesh_p;
    for (int k : perm) {
        gauss_p.push_back(gauss[k]);
        mesh_p.push_back(mesh[k]);
    }
    LossValue permuted = geometry_alignment(gauss_p, mesh_p, 0.15, stack);
    CHECK(permuted.value == doctest::Approx(base.value).epsilon(1e-12));
    for (std::size_t v = 0; v < perm.size(); ++v)
        CHECK(permuted.grads[v].rgb.data == base.grads[perm[v]].rgb.data);
}

TEST_CASE("motion_alignment averages per-frame MSE") {
    Rng rng(10);
    VideoClip clip;
    std::vector<ImageBuffer> renders;
    for (int t = 0; t < 4; ++t) {
        clip.frames.push_back(random_image(rng, 8, 8));
        renders.push_back(random_image(rng, 8, 8));
    }
    clip.timestamps = normalized_timestamps(4);

    LossValue ma = motion_alignment(renders, clip);
    REQUIRE(ma.grads.size() == 4);
    double expected = 0.0;
    for (int t = 0; t < 4; ++t) expected += mse_loss(renders[t], clip.frames[t]).value / 4.0;
    CHECK(ma.value == doctest::Approx(expected).epsilon(1e-12));

    // Matching renders: zero. Single frame: reduces to mse_loss.
    CHECK(motion_alignment({clip.frames[0]}, VideoClip{{clip.frames[0]}, {0.0}}).value == 0.0);
    VideoClip one{{clip.frames[1]}, {0.0}};
    CHECK(motion_alignment({renders[1]}, one).value ==
          doctest::Approx(mse_loss(renders[1], clip.frames[1]).value));

    CHECK_THROWS_AS(motion_alignment({renders[0]}, clip), invalid_parameter_error);
}

TEST_CASE("all loss gradients vanish at the global minimum") {
    Rng rng(11);
    FeatureStack stack(41);
    ImageBuffer a = random_image(rng, 10, 10);
    for (const ImageGrad& g : {mse_loss(a, a).grads[0], mask_loss(a, a).grads[0],
                               perceptual_loss(a, a, stack).grads[0],
                               texture_alignment(a, a, 0.3, stack).grads[0]}) {
        for (double v : g.rgb.data) CHECK(v == doctest::Approx(0.0).epsilon(1e-12));
        for (double v : g.alpha.data) CHECK(v == doctest::Approx(0.0).epsilon(1e-12));
    }
}
