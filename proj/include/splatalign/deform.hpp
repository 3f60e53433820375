#pragma once

#include <string>
#include <vector>

#include "splatalign/render.hpp"
#include "splatalign/rng.hpp"
#include "splatalign/scene.hpp"

namespace splatalign {

// Frequency encoding: [v, sin(2^k pi v), cos(2^k pi v)] for k = 0..L-1,
// interleaved per input coordinate.
std::vector<double> positional_encoding(const std::vector<double>& v, int frequency_count);

inline int positional_encoding_dim(int input_dim, int frequency_count) {
    return input_dim + 2 * frequency_count * input_dim;
}

struct DenseLayer {
    int in_dim = 0, out_dim = 0;
    std::vector<double> weights;  // row-major, out_dim x in_dim
    std::vector<double> biases;
};

// Time-conditioned MLP mapping (point position, time) to additive deltas for
// position, rotation and log-scale (plus opacity logit when enabled). The
// final layer starts at zero so a fresh field is the identity deformation.
class DeformationField {
public:
    struct Config {
        int hidden_width = 64;
        int hidden_layers = 2;
        int freq_position = 6;
        int freq_time = 4;
        bool deform_opacity = false;  // off by default; motion stays geometric
    };

    DeformationField() = default;
    DeformationField(const Config& config, Rng& rng);

    const Config& config() const { return config_; }
    std::vector<DenseLayer>& layers() { return layers_; }
    const std::vector<DenseLayer>& layers() const { return layers_; }
    int output_dim() const { return config_.deform_opacity ? 11 : 10; }
    int input_dim() const;

    std::size_t parameter_count() const;
    void flatten(std::vector<double>& out) const;
    void unflatten(const std::vector<double>& in);

    // Weight checkpoint: little-endian u32 header (encoding counts, layer
    // count, per-layer in/out sizes) followed by float32 weights and biases.
    void save(const std::string& path) const;
    static DeformationField load(const std::string& path);

private:
    Config config_;
    std::vector<DenseLayer> layers_;
};

// Gradients for every field weight, flattened in layer order (weights then
// biases per layer), plus gradients on the undeformed cloud.
struct DeformGrads {
    std::vector<double> field;
    RenderGrads cloud;
};

// Applies the field at normalized time t: mu' = mu + dmu, q' =
// normalize(q + dq), s' = s + ds; colors and opacities pass through
// (opacity logit shifts only when the field was built with deform_opacity).
GaussianCloud deform(const GaussianCloud& cloud, double t, const DeformationField& field);

// Exact VJP through the MLP, the frequency encoding of the position input and
// the quaternion renormalization. `upstream` holds gradients on the deformed
// cloud's fields.
DeformGrads deform_backward(const GaussianCloud& cloud, double t, const DeformationField& field,
                            const RenderGrads& upstream);

}  // namespace splatalign
