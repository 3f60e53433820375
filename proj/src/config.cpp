#include "splatalign/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "splatalign/errors.hpp"

namespace splatalign {

namespace {

using nlohmann::json;

// Field table shared by the reader and the writer so the two cannot drift.
struct Binder {
    json* out = nullptr;
    const json* in = nullptr;
    std::set<std::string>* seen = nullptr;

    template <typename T>
    void field(const char* key, T& value) {
        if (out) {
            (*out)[key] = value;
        } else if (in->contains(key)) {
            seen->insert(key);
            try {
                value = in->at(key).get<T>();
            } catch (const json::exception&) {
                throw invalid_parameter_error(std::string("config: bad value for key '") + key +
                                              "'");
            }
        }
    }

    void field(const char* key, Vec3& value) {
        if (out) {
            (*out)[key] = {value.x, value.y, value.z};
        } else if (in->contains(key)) {
            seen->insert(key);
            const auto& arr = in->at(key);
            if (!arr.is_array() || arr.size() != 3)
                throw invalid_parameter_error(std::string("config: key '") + key +
                                              "' must be a 3-element array");
            value = {arr[0].get<double>(), arr[1].get<double>(), arr[2].get<double>()};
        }
    }
};

void bind(RunConfig& c, Binder& b) {
    b.field("frames_dir", c.frames_dir);
    b.field("meshes_dir", c.meshes_dir);
    b.field("out_dir", c.out_dir);
    b.field("width", c.width);
    b.field("height", c.height);
    b.field("background", c.background);
    b.field("lambda_lpips", c.lambda_lpips);
    b.field("w_ta", c.w_ta);
    b.field("w_ga", c.w_ga);
    b.field("w_t2i", c.w_t2i);
    b.field("w_ma", c.w_ma);
    b.field("w_time", c.w_time);
    b.field("w_mv", c.w_mv);
    b.field("static_iters", c.static_iters);
    b.field("dynamic_iters", c.dynamic_iters);
    b.field("adam_beta1", c.adam.beta1);
    b.field("adam_beta2", c.adam.beta2);
    b.field("adam_epsilon", c.adam.epsilon);
    b.field("lr_position", c.rates.position);
    b.field("lr_rotation", c.rates.rotation);
    b.field("lr_scale", c.rates.log_scale);
    b.field("lr_color", c.rates.color);
    b.field("lr_opacity", c.rates.opacity);
    b.field("lr_deform", c.lr_deform);
    b.field("n_points", c.n_points);
    b.field("n_views", c.n_views);
    b.field("view_elevation_min_deg", c.view_elevation_min_deg);
    b.field("view_elevation_max_deg", c.view_elevation_max_deg);
    b.field("focal_jitter_px", c.focal_jitter_px);
    b.field("camera_radius", c.camera_radius);
    b.field("z_near", c.z_near);
    b.field("n_frames", c.n_frames);
    b.field("seed", c.seed);
    b.field("threads", c.threads);
    b.field("oracle", c.oracle);
    b.field("focal_init", c.focal_init);
    b.field("focal_offset_min", c.focal_offset_min);
    b.field("focal_offset_max", c.focal_offset_max);
    b.field("focal_candidates", c.focal_candidates);
    b.field("focal_coarse_to_fine", c.focal_coarse_to_fine);
    b.field("focal_per_frame", c.focal_per_frame);
    b.field("deform_hidden_width", c.deform.hidden_width);
    b.field("deform_hidden_layers", c.deform.hidden_layers);
    b.field("deform_freq_position", c.deform.freq_position);
    b.field("deform_freq_time", c.deform.freq_time);
    b.field("deform_opacity", c.deform.deform_opacity);
    b.field("t_max", c.t_max);
    b.field("tau_min_fraction", c.tau_min_fraction);
    b.field("tau_max_fraction", c.tau_max_fraction);
}

void validate(const RunConfig& c) {
    if (c.static_iters < 0 || c.dynamic_iters < 0)
        throw invalid_parameter_error("config: iteration counts must be >= 0");
    if (c.w_ta < 0 || c.w_ga < 0 || c.w_t2i < 0 || c.w_ma < 0 || c.w_time < 0 || c.w_mv < 0 ||
        c.lambda_lpips < 0)
        throw invalid_parameter_error("config: loss weights must be >= 0");
    if (c.width <= 0 || c.height <= 0)
        throw invalid_parameter_error("config: image size must be positive");
    if (c.n_points <= 0) throw invalid_parameter_error("config: n_points must be positive");
    if (c.n_views < 1) throw invalid_parameter_error("config: n_views must be >= 1");
    if (c.t_max < 2) throw invalid_parameter_error("config: t_max must be >= 2");
}

}  // namespace

RunConfig RunConfig::from_json_text(const std::string& text) {
    json parsed;
    try {
        parsed = json::parse(text);
    } catch (const json::exception& e) {
        throw invalid_parameter_error(std::string("config: invalid JSON: ") + e.what());
    }
    if (!parsed.is_object()) throw invalid_parameter_error("config: root must be an object");

    RunConfig config;
    std::set<std::string> seen;
    Binder binder;
    binder.in = &parsed;
    binder.seen = &seen;
    bind(config, binder);

    for (const auto& [key, _] : parsed.items())
        if (!seen.count(key))
            throw invalid_parameter_error("config: unknown key '" + key + "'");
    validate(config);
    return config;
}

RunConfig RunConfig::from_json_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw io_error("config: cannot open " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return from_json_text(ss.str());
}

std::string RunConfig::to_json_text() const {
    json out;
    Binder binder;
    binder.out = &out;
    bind(const_cast<RunConfig&>(*this), binder);
    return out.dump(2);
}

}  // namespace splatalign
