#include "splatalign/deform.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "splatalign/errors.hpp"

namespace splatalign {

namespace {

constexpr double kPi = 3.14159265358979323846;

void encode_into(const double* v, int d, int freq_count, double* out) {
    int o = 0;
    for (int i = 0; i < d; ++i) out[o++] = v[i];
    for (int k = 0; k < freq_count; ++k) {
        double scale = std::ldexp(kPi, k);  // 2^k * pi
        for (int i = 0; i < d; ++i) {
            out[o++] = std::sin(scale * v[i]);
            out[o++] = std::cos(scale * v[i]);
        }
    }
}

// d(encoding)/d(v_i) contracted with upstream, accumulated into g_v.
void encode_backward(const double* v, int d, int freq_count, const double* upstream,
                     double* g_v) {
    int o = 0;
    for (int i = 0; i < d; ++i) g_v[i] += upstream[o++];
    for (int k = 0; k < freq_count; ++k) {
        double scale = std::ldexp(kPi, k);
        for (int i = 0; i < d; ++i) {
            g_v[i] += upstream[o++] * scale * std::cos(scale * v[i]);
            g_v[i] += upstream[o++] * -scale * std::sin(scale * v[i]);
        }
    }
}

void write_u32(std::ostream& os, uint32_t v) {
    unsigned char b[4] = {(unsigned char)(v & 0xff), (unsigned char)((v >> 8) & 0xff),
                          (unsigned char)((v >> 16) & 0xff), (unsigned char)((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return uint32_t(b[0]) | (uint32_t(b[1]) << 8) | (uint32_t(b[2]) << 16) |
           (uint32_t(b[3]) << 24);
}

void write_f32(std::ostream& os, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    write_u32(os, bits);
}

float read_f32(std::istream& is) {
    uint32_t bits = read_u32(is);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

}  // namespace

std::vector<double> positional_encoding(const std::vector<double>& v, int frequency_count) {
    if (frequency_count < 0)
        throw invalid_parameter_error("positional_encoding: negative frequency count");
    std::vector<double> out(positional_encoding_dim(int(v.size()), frequency_count));
    encode_into(v.data(), int(v.size()), frequency_count, out.data());
    return out;
}

DeformationField::DeformationField(const Config& config, Rng& rng) : config_(config) {
    int in = input_dim();
    std::vector<int> dims;
    dims.push_back(in);
    for (int l = 0; l < config.hidden_layers; ++l) dims.push_back(config.hidden_width);
    dims.push_back(output_dim());

    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        DenseLayer layer;
        layer.in_dim = dims[l];
        layer.out_dim = dims[l + 1];
        layer.weights.resize(std::size_t(layer.in_dim) * layer.out_dim);
        layer.biases.assign(layer.out_dim, 0.0);
        bool final_layer = (l + 2 == dims.size());
        double scale = final_layer ? 0.0 : std::sqrt(2.0 / layer.in_dim);
        for (auto& w : layer.weights) w = final_layer ? 0.0 : scale * rng.normal();
        layers_.push_back(std::move(layer));
    }
}

int DeformationField::input_dim() const {
    return positional_encoding_dim(3, config_.freq_position) +
           positional_encoding_dim(1, config_.freq_time);
}

std::size_t DeformationField::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.weights.size() + l.biases.size();
    return n;
}

void DeformationField::flatten(std::vector<double>& out) const {
    out.clear();
    out.reserve(parameter_count());
    for (const auto& l : layers_) {
        out.insert(out.end(), l.weights.begin(), l.weights.end());
        out.insert(out.end(), l.biases.begin(), l.biases.end());
    }
}

void DeformationField::unflatten(const std::vector<double>& in) {
    if (in.size() != parameter_count())
        throw invalid_parameter_error("DeformationField::unflatten: size mismatch");
    std::size_t o = 0;
    for (auto& l : layers_) {
        std::copy(in.begin() + o, in.begin() + o + l.weights.size(), l.weights.begin());
        o += l.weights.size();
        std::copy(in.begin() + o, in.begin() + o + l.biases.size(), l.biases.begin());
        o += l.biases.size();
    }
}

void DeformationField::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw io_error("DeformationField::save: cannot open " + path);
    write_u32(os, uint32_t(config_.freq_position));
    write_u32(os, uint32_t(config_.freq_time));
    write_u32(os, config_.deform_opacity ? 1u : 0u);
    write_u32(os, uint32_t(layers_.size()));
    for (const auto& l : layers_) {
        write_u32(os, uint32_t(l.in_dim));
        write_u32(os, uint32_t(l.out_dim));
    }
    for (const auto& l : layers_) {
        for (double w : l.weights) write_f32(os, float(w));
        for (double b : l.biases) write_f32(os, float(b));
    }
    if (!os) throw io_error("DeformationField::save: write failed for " + path);
}

DeformationField DeformationField::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw io_error("DeformationField::load: cannot open " + path);
    DeformationField field;
    field.config_.freq_position = int(read_u32(is));
    field.config_.freq_time = int(read_u32(is));
    field.config_.deform_opacity = read_u32(is) != 0;
    uint32_t n_layers = read_u32(is);
    if (!is || n_layers == 0 || n_layers > 64)
        throw io_error("DeformationField::load: malformed header in " + path);
    field.layers_.resize(n_layers);
    for (auto& l : field.layers_) {
        l.in_dim = int(read_u32(is));
        l.out_dim = int(read_u32(is));
        if (!is || l.in_dim <= 0 || l.out_dim <= 0)
            throw io_error("DeformationField::load: malformed layer sizes in " + path);
        l.weights.resize(std::size_t(l.in_dim) * l.out_dim);
        l.biases.resize(l.out_dim);
    }
    field.config_.hidden_layers = int(n_layers) - 1;
    field.config_.hidden_width = field.layers_.size() > 1 ? field.layers_[0].out_dim : 0;
    for (auto& l : field.layers_) {
        for (auto& w : l.weights) w = read_f32(is);
        for (auto& b : l.biases) b = read_f32(is);
    }
    if (!is) throw io_error("DeformationField::load: truncated file " + path);
    return field;
}

namespace {

struct PointTrace {
    std::vector<double> input;
    std::vector<std::vector<double>> activations;  // post-ReLU per hidden layer
    std::vector<double> output;
};

void forward_point(const DeformationField& field, const Vec3& position, double t,
                   PointTrace& trace) {
    const auto& cfg = field.config();
    const auto& layers = field.layers();
    trace.input.assign(field.input_dim(), 0.0);
    double pos[3] = {position.x, position.y, position.z};
    encode_into(pos, 3, cfg.freq_position, trace.input.data());
    encode_into(&t, 1, cfg.freq_time,
                trace.input.data() + positional_encoding_dim(3, cfg.freq_position));

    trace.activations.assign(layers.size() - 1, {});
    const std::vector<double>* current = &trace.input;
    for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
        const DenseLayer& layer = layers[l];
        auto& act = trace.activations[l];
        act.assign(layer.out_dim, 0.0);
        for (int o = 0; o < layer.out_dim; ++o) {
            const double* w = layer.weights.data() + std::size_t(o) * layer.in_dim;
            double s = layer.biases[o];
            for (int i = 0; i < layer.in_dim; ++i) s += w[i] * (*current)[i];
            act[o] = s > 0.0 ? s : 0.0;
        }
        current = &act;
    }
    const DenseLayer& last = layers.back();
    trace.output.assign(last.out_dim, 0.0);
    for (int o = 0; o < last.out_dim; ++o) {
        const double* w = last.weights.data() + std::size_t(o) * last.in_dim;
        double s = last.biases[o];
        for (int i = 0; i < last.in_dim; ++i) s += w[i] * (*current)[i];
        trace.output[o] = s;
    }
}

}  // namespace

GaussianCloud deform(const GaussianCloud& cloud, double t, const DeformationField& field) {
    if (t < 0.0 || t > 1.0) throw invalid_parameter_error("deform: time outside [0,1]");
    if (field.layers().empty()) throw invalid_parameter_error("deform: uninitialized field");

    GaussianCloud out = cloud;
    PointTrace trace;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        forward_point(field, cloud.positions[i], t, trace);
        for (std::size_t l = 0; l < trace.output.size(); ++l)
            if (!std::isfinite(trace.output[l]))
                throw numeric_overflow_error("deform: non-finite output at final layer, point " +
                                             std::to_string(i));
        const double* y = trace.output.data();
        out.positions[i] = cloud.positions[i] + Vec3{y[0], y[1], y[2]};
        if (y[3] == 0.0 && y[4] == 0.0 && y[5] == 0.0 && y[6] == 0.0) {
            out.rotations[i] = cloud.rotations[i];  // exact identity, no renorm drift
        } else {
            Quat q = cloud.rotations[i] + Quat{y[3], y[4], y[5], y[6]};
            out.rotations[i] = q.normalized();
        }
        out.log_scales[i] = cloud.log_scales[i] + Vec3{y[7], y[8], y[9]};
        if (field.config().deform_opacity) out.opacity_logits[i] = cloud.opacity_logits[i] + y[10];
    }
    return out;
}

DeformGrads deform_backward(const GaussianCloud& cloud, double t, const DeformationField& field,
                            const RenderGrads& upstream) {
    if (t < 0.0 || t > 1.0) throw invalid_parameter_error("deform_backward: time outside [0,1]");
    if (upstream.positions.size() != cloud.size())
        throw invalid_parameter_error("deform_backward: upstream shape mismatch");

    const auto& layers = field.layers();
    const auto& cfg = field.config();
    DeformGrads grads;
    grads.field.assign(field.parameter_count(), 0.0);
    grads.cloud.resize(cloud.size());

    // Per-layer offsets into the flattened gradient vector.
    std::vector<std::size_t> w_off(layers.size()), b_off(layers.size());
    std::size_t o = 0;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        w_off[l] = o;
        o += layers[l].weights.size();
        b_off[l] = o;
        o += layers[l].biases.size();
    }

    PointTrace trace;
    std::vector<double> g_out, g_in;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        forward_point(field, cloud.positions[i], t, trace);
        const double* y = trace.output.data();

        // Colors and opacities pass straight through.
        grads.cloud.colors[i] = upstream.colors[i];
        grads.cloud.opacity_logits[i] = upstream.opacity_logits[i];

        g_out.assign(field.output_dim(), 0.0);
        g_out[0] = upstream.positions[i].x;
        g_out[1] = upstream.positions[i].y;
        g_out[2] = upstream.positions[i].z;

        // q' = v / |v|, v = q + dq: both q and dq receive the same gradient.
        Quat v = cloud.rotations[i] + Quat{y[3], y[4], y[5], y[6]};
        double n = v.norm();
        Quat vn = v.normalized();
        const auto& gq = upstream.rotations[i];
        double dot = gq[0] * vn.w + gq[1] * vn.x + gq[2] * vn.y + gq[3] * vn.z;
        double gv[4] = {(gq[0] - vn.w * dot) / n, (gq[1] - vn.x * dot) / n,
                        (gq[2] - vn.y * dot) / n, (gq[3] - vn.z * dot) / n};
        for (int k = 0; k < 4; ++k) {
            g_out[3 + k] = gv[k];
            grads.cloud.rotations[i][k] = gv[k];
        }

        g_out[7] = upstream.log_scales[i].x;
        g_out[8] = upstream.log_scales[i].y;
        g_out[9] = upstream.log_scales[i].z;
        grads.cloud.log_scales[i] = upstream.log_scales[i];
        if (cfg.deform_opacity) g_out[10] += upstream.opacity_logits[i];

        // Reverse through the dense stack.
        for (std::size_t l = layers.size(); l-- > 0;) {
            const DenseLayer& layer = layers[l];
            const std::vector<double>& in =
                l == 0 ? trace.input : trace.activations[l - 1];
            double* gw = grads.field.data() + w_off[l];
            double* gb = grads.field.data() + b_off[l];
            g_in.assign(layer.in_dim, 0.0);
            for (int out_i = 0; out_i < layer.out_dim; ++out_i) {
                double g = g_out[out_i];
                if (g == 0.0) continue;
                const double* w = layer.weights.data() + std::size_t(out_i) * layer.in_dim;
                double* gw_row = gw + std::size_t(out_i) * layer.in_dim;
                gb[out_i] += g;
                for (int in_i = 0; in_i < layer.in_dim; ++in_i) {
                    gw_row[in_i] += g * in[in_i];
                    g_in[in_i] += g * w[in_i];
                }
            }
            if (l > 0) {
                // ReLU mask of the producing layer.
                const auto& act = trace.activations[l - 1];
                for (int k = 0; k < layer.in_dim; ++k)
                    if (act[k] <= 0.0) g_in[k] = 0.0;
            }
            g_out = g_in;
        }

        // Position gradient: identity path plus the encoding of the input.
        grads.cloud.positions[i] = upstream.positions[i];
        double pos[3] = {cloud.positions[i].x, cloud.positions[i].y, cloud.positions[i].z};
        double g_pos[3] = {0.0, 0.0, 0.0};
        encode_backward(pos, 3, cfg.freq_position, g_out.data(), g_pos);
        grads.cloud.positions[i] += Vec3{g_pos[0], g_pos[1], g_pos[2]};
    }
    return grads;
}

}  // namespace splatalign
