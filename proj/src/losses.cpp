#include "splatalign/losses.hpp"

#include <cmath>

#include "splatalign/errors.hpp"
#include "splatalign/rng.hpp"

namespace splatalign {

namespace {

constexpr double kNormEps = 1e-10;

void require_same_shape(const ImageBuffer& a, const ImageBuffer& b, const char* op) {
    if (!a.same_shape(b))
        throw invalid_parameter_error(std::string(op) + ": image dimensions differ");
}

// One H x W x C feature plane, channel-major.
struct FeatureMap {
    int width = 0, height = 0, channels = 0;
    std::vector<double> data;

    FeatureMap() = default;
    FeatureMap(int w, int h, int c) : width(w), height(h), channels(c), data(std::size_t(w) * h * c, 0.0) {}
    double& at(int x, int y, int c) { return data[(std::size_t(c) * height + y) * width + x]; }
    double at(int x, int y, int c) const { return data[(std::size_t(c) * height + y) * width + x]; }
};

int half_dim(int d) { return (d + 1) / 2; }

// 3x3 convolution, stride 2, zero padding 1, followed by ReLU.
FeatureMap conv_relu(const FeatureMap& in, const std::vector<double>& filters, int out_ch) {
    FeatureMap out(half_dim(in.width), half_dim(in.height), out_ch);
    const int in_ch = in.channels;
    for (int oc = 0; oc < out_ch; ++oc) {
        const double* w = filters.data() + std::size_t(oc) * in_ch * 9;
        for (int oy = 0; oy < out.height; ++oy) {
            for (int ox = 0; ox < out.width; ++ox) {
                double s = 0.0;
                for (int ic = 0; ic < in_ch; ++ic) {
                    for (int ky = 0; ky < 3; ++ky) {
                        int iy = 2 * oy + ky - 1;
                        if (iy < 0 || iy >= in.height) continue;
                        for (int kx = 0; kx < 3; ++kx) {
                            int ix = 2 * ox + kx - 1;
                            if (ix < 0 || ix >= in.width) continue;
                            s += w[(ic * 3 + ky) * 3 + kx] * in.at(ix, iy, ic);
                        }
                    }
                }
                out.at(ox, oy, oc) = s > 0.0 ? s : 0.0;
            }
        }
    }
    return out;
}

// Transposed pass of conv_relu: scatters g_out back onto g_in, masking by the
// forward activations.
void conv_relu_backward(const FeatureMap& in, const FeatureMap& out,
                        const std::vector<double>& filters, const FeatureMap& g_out,
                        FeatureMap& g_in) {
    const int in_ch = in.channels, out_ch = out.channels;
    for (int oc = 0; oc < out_ch; ++oc) {
        const double* w = filters.data() + std::size_t(oc) * in_ch * 9;
        for (int oy = 0; oy < out.height; ++oy) {
            for (int ox = 0; ox < out.width; ++ox) {
                if (out.at(ox, oy, oc) <= 0.0) continue;  // ReLU mask
                double g = g_out.at(ox, oy, oc);
                if (g == 0.0) continue;
                for (int ic = 0; ic < in_ch; ++ic) {
                    for (int ky = 0; ky < 3; ++ky) {
                        int iy = 2 * oy + ky - 1;
                        if (iy < 0 || iy >= in.height) continue;
                        for (int kx = 0; kx < 3; ++kx) {
                            int ix = 2 * ox + kx - 1;
                            if (ix < 0 || ix >= in.width) continue;
                            g_in.at(ix, iy, ic) += g * w[(ic * 3 + ky) * 3 + kx];
                        }
                    }
                }
            }
        }
    }
}

FeatureMap rgb_to_feature(const ImageBuffer& img) {
    FeatureMap f(img.width, img.height, 3);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x) f.at(x, y, c) = img.at(x, y, c);
    return f;
}

// Channel unit-normalization z_hat = z / sqrt(sum_c z_c^2 + eps).
FeatureMap normalize_channels(const FeatureMap& f) {
    FeatureMap out(f.width, f.height, f.channels);
    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x) {
            double n2 = kNormEps;
            for (int c = 0; c < f.channels; ++c) n2 += f.at(x, y, c) * f.at(x, y, c);
            double inv = 1.0 / std::sqrt(n2);
            for (int c = 0; c < f.channels; ++c) out.at(x, y, c) = f.at(x, y, c) * inv;
        }
    return out;
}

}  // namespace

FeatureStack::FeatureStack(uint64_t seed) {
    Rng rng(seed);
    for (int l = 0; l < kLayers; ++l) {
        int in_ch = in_channels(l);
        filters_[l].resize(std::size_t(kChannels[l]) * in_ch * 9);
        double scale = std::sqrt(2.0 / (in_ch * 9.0));
        for (auto& w : filters_[l]) w = scale * rng.normal();
    }
}

LossValue mse_loss(const ImageBuffer& a, const ImageBuffer& b) {
    require_same_shape(a, b, "mse_loss");
    LossValue out;
    out.grads.emplace_back(a.width, a.height);
    const double inv_n = 1.0 / (a.pixel_count() * 3.0);
    double sum = 0.0;
    for (std::size_t i = 0; i < a.rgb.size(); ++i) {
        double d = a.rgb[i] - b.rgb[i];
        sum += d * d;
        out.grads[0].rgb.data[i] = 2.0 * d * inv_n;
    }
    out.value = sum * inv_n;
    return out;
}

LossValue mask_loss(const ImageBuffer& a, const ImageBuffer& b) {
    require_same_shape(a, b, "mask_loss");
    LossValue out;
    out.grads.emplace_back(a.width, a.height);
    const double inv_n = 1.0 / double(a.pixel_count());
    double sum = 0.0;
    for (std::size_t i = 0; i < a.alpha.size(); ++i) {
        double d = a.alpha[i] - b.alpha[i];
        sum += d * d;
        out.grads[0].alpha.data[i] = 2.0 * d * inv_n;
    }
    out.value = sum * inv_n;
    return out;
}

LossValue perceptual_loss(const ImageBuffer& a, const ImageBuffer& b, const FeatureStack& stack) {
    require_same_shape(a, b, "perceptual_loss");
    if (a.width < 8 || a.height < 8)
        throw invalid_parameter_error("perceptual_loss: image smaller than the stack's receptive field");

    // Forward both stacks, keeping raw features of `a` for the backward pass.
    std::vector<FeatureMap> raw_a(FeatureStack::kLayers), raw_b(FeatureStack::kLayers);
    FeatureMap cur_a = rgb_to_feature(a), cur_b = rgb_to_feature(b);
    for (int l = 0; l < FeatureStack::kLayers; ++l) {
        raw_a[l] = conv_relu(cur_a, stack.filters(l), FeatureStack::kChannels[l]);
        raw_b[l] = conv_relu(cur_b, stack.filters(l), FeatureStack::kChannels[l]);
        cur_a = raw_a[l];
        cur_b = raw_b[l];
    }

    LossValue out;
    out.grads.emplace_back(a.width, a.height);
    std::vector<FeatureMap> g_raw(FeatureStack::kLayers);

    for (int l = 0; l < FeatureStack::kLayers; ++l) {
        const FeatureMap& za = raw_a[l];
        FeatureMap na = normalize_channels(za);
        FeatureMap nb = normalize_channels(raw_b[l]);
        const double inv_hw = 1.0 / (double(za.width) * za.height);
        g_raw[l] = FeatureMap(za.width, za.height, za.channels);

        for (int y = 0; y < za.height; ++y)
            for (int x = 0; x < za.width; ++x) {
                double norm2 = kNormEps;
                for (int c = 0; c < za.channels; ++c) norm2 += za.at(x, y, c) * za.at(x, y, c);
                double inv_norm = 1.0 / std::sqrt(norm2);

                double dot = 0.0;  // sum_c g_hat_c * z_hat_c, for the normalization Jacobian
                for (int c = 0; c < za.channels; ++c) {
                    double d = na.at(x, y, c) - nb.at(x, y, c);
                    out.value += d * d * inv_hw;
                    dot += 2.0 * d * inv_hw * na.at(x, y, c);
                }
                for (int c = 0; c < za.channels; ++c) {
                    double g_hat = 2.0 * (na.at(x, y, c) - nb.at(x, y, c)) * inv_hw;
                    g_raw[l].at(x, y, c) = (g_hat - na.at(x, y, c) * dot) * inv_norm;
                }
            }
    }

    // Chain the per-layer feature gradients back to the input image.
    FeatureMap g_cur = g_raw[FeatureStack::kLayers - 1];
    for (int l = FeatureStack::kLayers - 1; l >= 0; --l) {
        const FeatureMap& in = l == 0 ? rgb_to_feature(a) : raw_a[l - 1];
        FeatureMap g_in(in.width, in.height, in.channels);
        conv_relu_backward(in, raw_a[l], stack.filters(l), g_cur, g_in);
        if (l > 0) {
            for (std::size_t i = 0; i < g_in.data.size(); ++i) g_in.data[i] += g_raw[l - 1].data[i];
        }
        g_cur = g_in;
    }
    for (int y = 0; y < a.height; ++y)
        for (int x = 0; x < a.width; ++x)
            for (int c = 0; c < 3; ++c) out.grads[0].rgb.at(x, y, c) = g_cur.at(x, y, c);
    return out;
}

LossValue texture_alignment(const ImageBuffer& x, const ImageBuffer& anchor, double lambda,
                            const FeatureStack& stack) {
    LossValue mse = mse_loss(x, anchor);
    LossValue mask = mask_loss(x, anchor);
    LossValue lpips = perceptual_loss(x, anchor, stack);

    LossValue out;
    out.value = mse.value + mask.value + lambda * lpips.value;
    out.grads.emplace_back(x.width, x.height);
    for (std::size_t i = 0; i < out.grads[0].rgb.data.size(); ++i)
        out.grads[0].rgb.data[i] = mse.grads[0].rgb.data[i] + lambda * lpips.grads[0].rgb.data[i];
    out.grads[0].alpha = mask.grads[0].alpha;
    return out;
}

LossValue geometry_alignment(const std::vector<ImageBuffer>& gauss_renders,
                             const std::vector<ImageBuffer>& mesh_renders, double lambda,
                             const FeatureStack& stack) {
    if (gauss_renders.size() != mesh_renders.size())
        throw invalid_parameter_error("geometry_alignment: view list lengths differ");
    LossValue out;
    for (std::size_t i = 0; i < gauss_renders.size(); ++i) {
        LossValue per_view = texture_alignment(gauss_renders[i], mesh_renders[i], lambda, stack);
        out.value += per_view.value;
        out.grads.push_back(std::move(per_view.grads[0]));
    }
    return out;
}

LossValue motion_alignment(const std::vector<ImageBuffer>& front_renders, const VideoClip& video) {
    if (front_renders.size() != video.frame_count())
        throw invalid_parameter_error("motion_alignment: render count differs from clip length");
    LossValue out;
    const double inv_t = 1.0 / double(front_renders.size());
    for (std::size_t t = 0; t < front_renders.size(); ++t) {
        LossValue per_frame = mse_loss(front_renders[t], video.frames[t]);
        out.value += per_frame.value * inv_t;
        ImageGrad g = std::move(per_frame.grads[0]);
        for (auto& v : g.rgb.data) v *= inv_t;
        out.grads.push_back(std::move(g));
    }
    return out;
}

}  // namespace splatalign
