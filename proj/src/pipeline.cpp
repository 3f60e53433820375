#include "splatalign/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "splatalign/errors.hpp"
#include "splatalign/guidance.hpp"
#include "splatalign/image_io.hpp"
#include "splatalign/losses.hpp"
#include "splatalign/mesh_io.hpp"
#include "splatalign/mesh_render.hpp"
#include "splatalign/parallel.hpp"
#include "splatalign/ply_io.hpp"
#include "splatalign/render.hpp"
#include "splatalign/rng.hpp"

namespace splatalign {

namespace fs = std::filesystem;

namespace {

constexpr double kMattingThreshold = 0.05;

std::string frame_name(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "frame_%04zu.png", index);
    return buf;
}

std::string mesh_name(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "mesh_%04zu.obj", index);
    return buf;
}

RenderSettings render_settings(const RunConfig& config) {
    RenderSettings s;
    s.background = config.background;
    s.threads = resolve_threads(config.threads);
    return s;
}

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

// Sampled random view for geometry alignment / refinement terms.
Camera sample_view(const RunConfig& config, double focal, Rng& rng) {
    const double deg = 3.14159265358979323846 / 180.0;
    double azimuth = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
    double elevation =
        rng.uniform(config.view_elevation_min_deg * deg, config.view_elevation_max_deg * deg);
    double f = jitter_focal(focal, config.focal_jitter_px, rng.next_u64());
    return orbit_camera(azimuth, elevation, config.camera_radius, f, config.width, config.height,
                        config.z_near);
}

RgbField gaussian_noise(int width, int height, Rng& rng) {
    RgbField eps(width, height);
    for (auto& v : eps.data) v = rng.normal();
    return eps;
}

int sample_tau(const RunConfig& config, Rng& rng) {
    int lo = std::max(1, int(config.tau_min_fraction * config.t_max));
    int hi = std::min(config.t_max, int(config.tau_max_fraction * config.t_max));
    if (hi < lo) hi = lo;
    return lo + int(rng.uniform_index(uint64_t(hi - lo + 1)));
}

double rgb_mean_sq(const RgbField& field) {
    double s = 0.0;
    for (double v : field.data) s += v * v;
    return s / double(field.data.size());
}

}  // namespace

void write_report_csv(const StageReport& report, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw io_error("write_report_csv: cannot open " + path);
    os << "iter,l_mse,l_mask,l_lpips,l_ta,l_ga,l_t2i,l_ma,l_time,l_mv,total\n";
    char buf[400];
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        const StageRow& r = report.rows[i];
        std::snprintf(buf, sizeof buf,
                      "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", i,
                      r.mse, r.mask, r.lpips, r.ta, r.ga, r.t2i, r.ma, r.time, r.mv, r.total);
        os << buf;
    }
    if (!os) throw io_error("write_report_csv: write failed for " + path);
}

VideoClip ingest_anchor(const std::string& dir, const RunConfig& config) {
    if (!fs::is_directory(dir)) throw ingestion_error("ingest_anchor: no such directory " + dir);

    // Scan for the highest frame index, then demand a contiguous sequence.
    std::size_t max_index = 0;
    bool any = false;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        std::size_t index;
        if (std::sscanf(name.c_str(), "frame_%4zu.png", &index) == 1 &&
            name == frame_name(index)) {
            max_index = std::max(max_index, index);
            any = true;
        }
    }
    if (!any) throw ingestion_error("ingest_anchor: no frame_0000.png style frames in " + dir);

    VideoClip clip;
    for (std::size_t t = 0; t <= max_index; ++t) {
        fs::path path = fs::path(dir) / frame_name(t);
        if (!fs::exists(path))
            throw ingestion_error("ingest_anchor: missing frame " + frame_name(t));
        bool had_alpha = false;
        ImageBuffer frame = read_png(path.string(), &had_alpha);
        if (!had_alpha) {
            // Matting: keep pixels away from the declared background color.
            for (int y = 0; y < frame.height; ++y)
                for (int x = 0; x < frame.width; ++x) {
                    double d = std::max({std::abs(frame.at(x, y, 0) - config.background.x),
                                         std::abs(frame.at(x, y, 1) - config.background.y),
                                         std::abs(frame.at(x, y, 2) - config.background.z)});
                    frame.a(x, y) = d > kMattingThreshold ? 1.0 : 0.0;
                }
        }
        if (!clip.frames.empty() && !frame.same_shape(clip.frames.front()))
            throw ingestion_error("ingest_anchor: irregular size at " + frame_name(t));
        clip.frames.push_back(std::move(frame));
    }
    clip.timestamps = normalized_timestamps(clip.frames.size());
    return clip;
}

std::vector<TriMesh> ingest_meshes(const std::string& dir, std::size_t frame_count) {
    if (!fs::is_directory(dir)) throw ingestion_error("ingest_meshes: no such directory " + dir);
    fs::path first = fs::path(dir) / mesh_name(0);
    if (!fs::exists(first)) throw ingestion_error("ingest_meshes: missing " + mesh_name(0));

    std::vector<TriMesh> meshes;
    meshes.push_back(read_obj(first.string()));
    if (frame_count <= 1) return meshes;

    if (!fs::exists(fs::path(dir) / mesh_name(1))) {
        // Rigid-prior mode: one mesh reused across all timesteps.
        meshes.assign(frame_count, meshes.front());
        return meshes;
    }
    for (std::size_t t = 1; t < frame_count; ++t) {
        fs::path path = fs::path(dir) / mesh_name(t);
        if (!fs::exists(path)) throw ingestion_error("ingest_meshes: missing " + mesh_name(t));
        meshes.push_back(read_obj(path.string()));
    }
    return meshes;
}

GaussianCloud init_gaussians(const ImageBuffer&, const TriMesh& mesh, const RunConfig& config) {
    if (mesh.empty()) throw invalid_parameter_error("init_gaussians: empty mesh");

    // Cumulative triangle areas for area-weighted sampling.
    std::vector<double> cumulative(mesh.triangles.size());
    double total = 0.0;
    for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
        const auto& t = mesh.triangles[i];
        Vec3 e1 = mesh.vertices[t[1]] - mesh.vertices[t[0]];
        Vec3 e2 = mesh.vertices[t[2]] - mesh.vertices[t[0]];
        total += 0.5 * e1.cross(e2).norm();
        cumulative[i] = total;
    }
    if (total <= 0.0) throw invalid_parameter_error("init_gaussians: degenerate mesh");

    Rng rng = Rng(config.seed).fork(101);
    const std::size_t n = std::size_t(config.n_points);
    GaussianCloud cloud;
    cloud.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double u = rng.uniform() * total;
        std::size_t tri = std::lower_bound(cumulative.begin(), cumulative.end(), u) -
                          cumulative.begin();
        if (tri >= mesh.triangles.size()) tri = mesh.triangles.size() - 1;
        const auto& t = mesh.triangles[tri];

        double r1 = std::sqrt(rng.uniform());
        double r2 = rng.uniform();
        double b0 = 1.0 - r1, b1 = r1 * (1.0 - r2), b2 = r1 * r2;
        cloud.positions[i] = mesh.vertices[t[0]] * b0 + mesh.vertices[t[1]] * b1 +
                             mesh.vertices[t[2]] * b2;
        Vec3 color = mesh.vertex_colors[t[0]] * b0 + mesh.vertex_colors[t[1]] * b1 +
                     mesh.vertex_colors[t[2]] * b2;
        cloud.colors[i] = {clamp01(color.x), clamp01(color.y), clamp01(color.z)};
        cloud.rotations[i] = Quat{};
        cloud.opacity_logits[i] = 0.0;
    }

    // Isotropic log-scale from the mean nearest-neighbor distance.
    double mean_nn = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            double d2 = (cloud.positions[i] - cloud.positions[j]).dot(cloud.positions[i] -
                                                                      cloud.positions[j]);
            if (d2 < best) best = d2;
        }
        mean_nn += std::sqrt(best);
    }
    mean_nn /= double(n);
    double log_scale = std::log(std::max(mean_nn, 1e-6));
    for (std::size_t i = 0; i < n; ++i)
        cloud.log_scales[i] = {log_scale, log_scale, log_scale};
    return cloud;
}

Camera make_front_camera(const RunConfig& config, double focal) {
    return orbit_camera(0.0, 0.0, config.camera_radius, focal, config.width, config.height,
                        config.z_near);
}

double scene_extent(const GaussianCloud& cloud) {
    if (cloud.size() == 0) return 1.0;
    Vec3 centroid{};
    for (const auto& p : cloud.positions) centroid += p;
    centroid = centroid * (1.0 / double(cloud.size()));
    double extent = 0.0;
    for (const auto& p : cloud.positions) extent = std::max(extent, (p - centroid).norm());
    return extent > 0.0 ? extent : 1.0;
}

double psnr_rgb(const ImageBuffer& a, const ImageBuffer& b) {
    double mse = 0.0;
    for (std::size_t i = 0; i < a.rgb.size(); ++i) {
        double d = a.rgb[i] - b.rgb[i];
        mse += d * d;
    }
    mse /= double(a.rgb.size());
    if (mse <= 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

RgbField composite_over(const ImageBuffer& frame, const Vec3& background) {
    RgbField out(frame.width, frame.height);
    for (int y = 0; y < frame.height; ++y)
        for (int x = 0; x < frame.width; ++x) {
            double a = frame.a(x, y);
            out.at(x, y, 0) = frame.at(x, y, 0) * a + background.x * (1.0 - a);
            out.at(x, y, 1) = frame.at(x, y, 1) * a + background.y * (1.0 - a);
            out.at(x, y, 2) = frame.at(x, y, 2) * a + background.z * (1.0 - a);
        }
    return out;
}

namespace {

// Picks the oracle backend for one guidance role. In mock mode each call site
// builds a MockTargetOracle toward its pixel-space target; with a URL all
// roles share the endpoint and differ in the request's kind field.
struct OracleSource {
    bool mock = true;
    std::string endpoint;

    std::unique_ptr<DenoiserOracle> make(OracleKind kind, const RgbField& mock_target,
                                         const DiffusionSchedule& schedule) const {
        if (mock) return std::make_unique<MockTargetOracle>(mock_target, schedule, kind);
        RemoteOracleOptions options;
        options.kind = kind;
        return remote_oracle(endpoint, options);
    }
};

OracleSource oracle_source(const RunConfig& config) {
    OracleSource src;
    src.mock = config.oracle == "mock";
    if (!src.mock) src.endpoint = config.oracle;
    return src;
}

}  // namespace

StaticResult static_stage(const VideoClip& clip, const std::vector<TriMesh>& meshes,
                          const RunConfig& config) {
    if (clip.frames.empty()) throw invalid_parameter_error("static_stage: empty clip");
    if (meshes.empty()) throw invalid_parameter_error("static_stage: no meshes");
    Timer timer;

    // Focal alignment on frame 0 (per-frame sweeps change nothing for a
    // constant-focal anchor; the per-frame mode re-runs this per timestep).
    FocalSweepConfig sweep_config;
    sweep_config.initial_focal = config.focal_init > 0.0 ? config.focal_init : double(config.width);
    // Keep every candidate at a usable positive focal on small canvases.
    sweep_config.offset_min =
        std::max(config.focal_offset_min, -0.75 * sweep_config.initial_focal);
    sweep_config.offset_max = config.focal_offset_max;
    sweep_config.candidate_count = config.focal_candidates;
    sweep_config.coarse_to_fine = config.focal_coarse_to_fine;
    sweep_config.background = config.background;
    sweep_config.front_view = make_front_camera(config, sweep_config.initial_focal);

    StaticResult result;
    result.sweep = sweep_focal(meshes[0], clip.frames[0], sweep_config);
    result.focal = result.sweep.focal;

    const Camera front = make_front_camera(config, result.focal);
    const RenderSettings settings = render_settings(config);
    const DiffusionSchedule schedule = DiffusionSchedule::cosine(config.t_max);
    const FeatureStack stack(Rng(config.seed).fork(7).next_u64());
    const OracleSource oracles = oracle_source(config);

    result.cloud = init_gaussians(clip.frames[0], meshes[0], config);
    const double extent = scene_extent(result.cloud);
    CloudOptimizer optimizer(result.cloud, config.rates, extent, config.adam);

    const ImageBuffer& anchor0 = clip.frames[0];
    const RgbField anchor0_rgb = composite_over(anchor0, config.background);
    std::unique_ptr<DenoiserOracle> t2i_oracle =
        oracles.make(OracleKind::image, anchor0_rgb, schedule);
    const Condition t2i_condition = Condition::from_text("");

    Rng rng = Rng(config.seed).fork(11);
    for (int iter = 0; iter < config.static_iters; ++iter) {
        StageRow row;
        RenderGrads grads(result.cloud.size());

        // Texture alignment on the front view, expanded into its three
        // constituents so the report can break them out.
        ImageBuffer front_render = render(result.cloud, front, settings);
        LossValue mse = mse_loss(front_render, anchor0);
        LossValue mask = mask_loss(front_render, anchor0);
        LossValue lpips = perceptual_loss(front_render, anchor0, stack);
        row.mse = mse.value;
        row.mask = mask.value;
        row.lpips = lpips.value;
        row.ta = mse.value + mask.value + config.lambda_lpips * lpips.value;

        RgbField front_rgb_grad(config.width, config.height);
        ScalarField front_alpha_grad(config.width, config.height);
        for (std::size_t i = 0; i < front_rgb_grad.data.size(); ++i)
            front_rgb_grad.data[i] =
                config.w_ta * (mse.grads[0].rgb.data[i] +
                               config.lambda_lpips * lpips.grads[0].rgb.data[i]);
        for (std::size_t i = 0; i < front_alpha_grad.data.size(); ++i)
            front_alpha_grad.data[i] = config.w_ta * mask.grads[0].alpha.data[i];

        // T2I score distillation on the same front render.
        int tau = sample_tau(config, rng);
        RgbField eps = gaussian_noise(config.width, config.height, rng);
        RgbField sds = sds_gradient(front_render, *t2i_oracle, t2i_condition, tau, eps, schedule);
        row.t2i = schedule.weight[tau] > 0.0 ? rgb_mean_sq(sds) / schedule.weight[tau] : 0.0;
        for (std::size_t i = 0; i < front_rgb_grad.data.size(); ++i)
            front_rgb_grad.data[i] += config.w_t2i * sds.data[i];

        grads += render_backward(result.cloud, front, front_rgb_grad, front_alpha_grad, settings);

        // Gaussian-Mesh contrastive views.
        if (config.w_ga > 0.0) {
            std::vector<ImageBuffer> gauss_views, mesh_views;
            std::vector<Camera> cameras;
            for (int v = 0; v < config.n_views; ++v) {
                Camera cam = sample_view(config, result.focal, rng);
                gauss_views.push_back(render(result.cloud, cam, settings));
                mesh_views.push_back(render_mesh(meshes[0], cam, config.background));
                cameras.push_back(cam);
            }
            LossValue ga = geometry_alignment(gauss_views, mesh_views, config.lambda_lpips, stack);
            row.ga = ga.value;
            for (int v = 0; v < config.n_views; ++v) {
                ga.grads[v].rgb *= config.w_ga;
                for (auto& g : ga.grads[v].alpha.data) g *= config.w_ga;
                grads += render_backward(result.cloud, cameras[v], ga.grads[v].rgb,
                                         ga.grads[v].alpha, settings);
            }
        } else {
            // Keep the random stream aligned with the full configuration so
            // ablations differ only in the disabled term.
            for (int v = 0; v < config.n_views; ++v) sample_view(config, result.focal, rng);
        }

        row.total = config.w_ta * row.ta + config.w_ga * row.ga + config.w_t2i * row.t2i;
        optimizer.step(grads);
        result.report.rows.push_back(row);
    }

    ImageBuffer final_render = render(result.cloud, front, settings);
    ImageBuffer anchor_composited(config.width, config.height);
    anchor_composited.rgb = anchor0_rgb.data;
    result.report.final_psnr = psnr_rgb(final_render, anchor_composited);
    result.report.wall_clock_seconds = timer.seconds();
    return result;
}

DynamicResult dynamic_stage(const GaussianCloud& cloud, const VideoClip& clip,
                            const RunConfig& config, double focal) {
    if (clip.frames.empty()) throw invalid_parameter_error("dynamic_stage: empty clip");
    Timer timer;

    const Camera front = make_front_camera(config, focal);
    const RenderSettings settings = render_settings(config);
    const DiffusionSchedule schedule = DiffusionSchedule::cosine(config.t_max);
    const OracleSource oracles = oracle_source(config);
    const std::size_t n_frames = clip.frame_count();

    Rng rng = Rng(config.seed).fork(23);
    DynamicResult result;
    result.field = DeformationField(config.deform, rng);

    std::vector<double> params;
    result.field.flatten(params);
    OptimizerState state(params.size());
    std::vector<double> field_grads(params.size(), 0.0);

    const Condition text_condition = Condition::from_text("");

    for (int iter = 0; iter < config.dynamic_iters; ++iter) {
        StageRow row;
        std::fill(field_grads.begin(), field_grads.end(), 0.0);

        // Motion alignment: front view across every frame.
        std::vector<GaussianCloud> deformed(n_frames);
        std::vector<ImageBuffer> front_renders(n_frames);
        for (std::size_t t = 0; t < n_frames; ++t) {
            deformed[t] = deform(cloud, clip.timestamps[t], result.field);
            front_renders[t] = render(deformed[t], front, settings);
        }
        LossValue ma = motion_alignment(front_renders, clip);
        row.ma = ma.value;
        if (config.w_ma > 0.0) {
            for (std::size_t t = 0; t < n_frames; ++t) {
                ma.grads[t].rgb *= config.w_ma;
                RenderGrads rg = render_backward(deformed[t], front, ma.grads[t].rgb,
                                                 ma.grads[t].alpha, settings);
                DeformGrads dg =
                    deform_backward(cloud, clip.timestamps[t], result.field, rg);
                for (std::size_t i = 0; i < field_grads.size(); ++i)
                    field_grads[i] += dg.field[i];
            }
        }

        // Temporal refinement: all frames at one fresh random view. The mock
        // target is the frozen base cloud rendered from the same view.
        {
            Camera view = sample_view(config, focal, rng);
            int tau = sample_tau(config, rng);
            RgbField eps = gaussian_noise(config.width, config.height, rng);
            ImageBuffer base_view = render(cloud, view, settings);
            auto video_oracle =
                oracles.make(OracleKind::video, RgbField::from_rgb(base_view), schedule);

            std::vector<ImageBuffer> view_renders(n_frames);
            for (std::size_t t = 0; t < n_frames; ++t)
                view_renders[t] = render(deformed[t], view, settings);
            RefineResult refined = time_refine_loss(view_renders, *video_oracle, text_condition,
                                                    tau, eps, schedule);
            row.time = refined.value;
            if (config.w_time > 0.0) {
                ScalarField zero_alpha(config.width, config.height);
                for (std::size_t t = 0; t < n_frames; ++t) {
                    refined.grads[t] *= config.w_time;
                    RenderGrads rg = render_backward(deformed[t], view, refined.grads[t],
                                                     zero_alpha, settings);
                    DeformGrads dg = deform_backward(cloud, clip.timestamps[t], result.field, rg);
                    for (std::size_t i = 0; i < field_grads.size(); ++i)
                        field_grads[i] += dg.field[i];
                }
            }
        }

        // Multiview refinement: N_c' views at one random timestep, anchor
        // frame as condition; per-view mock targets are base-cloud renders.
        {
            std::size_t t_pick = rng.uniform_index(n_frames);
            int tau = sample_tau(config, rng);
            RgbField eps = gaussian_noise(config.width, config.height, rng);
            const Condition anchor_condition = Condition::from_image(clip.frames[t_pick]);
            const GaussianCloud& deformed_pick = deformed[t_pick];

            RenderGrads view_grads(cloud.size());
            ScalarField zero_alpha(config.width, config.height);
            const double inv_views = 1.0 / double(config.n_views);
            for (int v = 0; v < config.n_views; ++v) {
                Camera cam = sample_view(config, focal, rng);
                ImageBuffer view_render = render(deformed_pick, cam, settings);
                auto mv_oracle = oracles.make(
                    OracleKind::multiview, RgbField::from_rgb(render(cloud, cam, settings)),
                    schedule);
                RefineResult refined = mv_refine_loss({view_render}, *mv_oracle, anchor_condition,
                                                      tau, eps, schedule);
                row.mv += refined.value * inv_views;
                if (config.w_mv > 0.0) {
                    refined.grads[0] *= config.w_mv * inv_views;
                    view_grads += render_backward(deformed_pick, cam, refined.grads[0],
                                                  zero_alpha, settings);
                }
            }
            if (config.w_mv > 0.0) {
                DeformGrads dg =
                    deform_backward(cloud, clip.timestamps[t_pick], result.field, view_grads);
                for (std::size_t i = 0; i < field_grads.size(); ++i)
                    field_grads[i] += dg.field[i];
            }
        }

        row.total = config.w_ma * row.ma + config.w_time * row.time + config.w_mv * row.mv;
        result.field.flatten(params);
        adam_step(params, field_grads, state, config.lr_deform, config.adam);
        result.field.unflatten(params);
        result.report.rows.push_back(row);
    }

    result.report.wall_clock_seconds = timer.seconds();
    return result;
}

void render_sequence(const GaussianCloud& cloud, const DeformationField& field,
                     const RunConfig& config, const Camera& view,
                     const std::vector<double>& times, const std::string& out_dir) {
    fs::create_directories(out_dir);
    const RenderSettings settings = render_settings(config);
    for (std::size_t k = 0; k < times.size(); ++k) {
        GaussianCloud deformed = deform(cloud, times[k], field);
        ImageBuffer frame = render(deformed, view, settings);
        write_png((fs::path(out_dir) / frame_name(k)).string(), frame, true);
    }
}

RunResult run_pipeline(const RunConfig& config) {
    Timer timer;
    VideoClip clip = ingest_anchor(config.frames_dir, config);
    std::vector<TriMesh> meshes = ingest_meshes(config.meshes_dir, clip.frame_count());

    fs::create_directories(config.out_dir);
    StaticResult stage1 = static_stage(clip, meshes, config);
    DynamicResult stage2 = dynamic_stage(stage1.cloud, clip, config, stage1.focal);

    RunResult result;
    result.focal = stage1.focal;
    result.static_report = std::move(stage1.report);
    result.dynamic_report = std::move(stage2.report);

    fs::path out(config.out_dir);
    result.cloud_ply = (out / "cloud_static.ply").string();
    export_ply(stage1.cloud, result.cloud_ply);
    result.field_checkpoint = (out / "deform.bin").string();
    stage2.field.save(result.field_checkpoint);
    write_report_csv(result.static_report, (out / "static_report.csv").string());
    write_report_csv(result.dynamic_report, (out / "dynamic_report.csv").string());

    render_sequence(stage1.cloud, stage2.field, config,
                    make_front_camera(config, stage1.focal), clip.timestamps,
                    (out / "frames").string());

    nlohmann::json manifest;
    manifest["config"] = nlohmann::json::parse(config.to_json_text());
    manifest["focal"] = result.focal;
    manifest["final_psnr"] = result.static_report.final_psnr;
    manifest["static_iterations"] = result.static_report.rows.size();
    manifest["dynamic_iterations"] = result.dynamic_report.rows.size();
    manifest["static_seconds"] = result.static_report.wall_clock_seconds;
    manifest["dynamic_seconds"] = result.dynamic_report.wall_clock_seconds;
    manifest["total_seconds"] = timer.seconds();
    result.manifest_json = (out / "manifest.json").string();
    std::ofstream os(result.manifest_json);
    if (!os) throw io_error("run_pipeline: cannot write manifest");
    os << manifest.dump(2) << "\n";
    return result;
}

}  // namespace splatalign
