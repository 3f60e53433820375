#pragma once

#include <vector>

#include "splatalign/scene.hpp"

namespace splatalign {

// Per-image gradient of a loss: RGB part and alpha part.
struct ImageGrad {
    RgbField rgb;
    ScalarField alpha;

    ImageGrad() = default;
    ImageGrad(int w, int h) : rgb(w, h), alpha(w, h) {}
};

struct LossValue {
    double value = 0.0;
    std::vector<ImageGrad> grads;  // one per differentiable input image
};

// Fixed, seeded random convolution banks standing in for a pretrained
// perceptual encoder: three stride-2 3x3 layers (8/16/32 channels) with ReLU,
// features compared after channel unit-normalization.
class FeatureStack {
public:
    explicit FeatureStack(uint64_t seed = 17);

    static constexpr int kLayers = 3;
    static constexpr int kChannels[kLayers] = {8, 16, 32};

    const std::vector<double>& filters(int layer) const { return filters_[layer]; }
    int in_channels(int layer) const { return layer == 0 ? 3 : kChannels[layer - 1]; }

private:
    std::vector<double> filters_[kLayers];  // out*in*3*3, row-major
};

// Mean over pixels and channels of the squared RGB difference. Gradient is
// with respect to `a`.
LossValue mse_loss(const ImageBuffer& a, const ImageBuffer& b);

// Mean squared difference of the alpha channels; gradient on a's alpha.
LossValue mask_loss(const ImageBuffer& a, const ImageBuffer& b);

// Sum over layers of the per-layer mean squared difference between
// channel-unit-normalized feature maps. Requires images of at least 8x8.
LossValue perceptual_loss(const ImageBuffer& a, const ImageBuffer& b, const FeatureStack& stack);

// mse + mask + lambda * perceptual, gradients summed accordingly.
LossValue texture_alignment(const ImageBuffer& x, const ImageBuffer& anchor, double lambda,
                            const FeatureStack& stack);

// Sum over paired views of texture_alignment; one gradient per view, in order.
LossValue geometry_alignment(const std::vector<ImageBuffer>& gauss_renders,
                             const std::vector<ImageBuffer>& mesh_renders, double lambda,
                             const FeatureStack& stack);

// Mean over frames of mse_loss against the clip; one gradient per frame.
LossValue motion_alignment(const std::vector<ImageBuffer>& front_renders, const VideoClip& video);

}  // namespace splatalign
