#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "splatalign/config.hpp"
#include "splatalign/deform.hpp"
#include "splatalign/errors.hpp"
#include "splatalign/focal.hpp"
#include "splatalign/pipeline.hpp"
#include "splatalign/ply_io.hpp"
#include "splatalign/render.hpp"

namespace fs = std::filesystem;
using namespace splatalign;

namespace {

struct CommonFlags {
    std::string config_path;
    std::string frames_dir;
    std::string meshes_dir;
    std::string out_dir;
    std::string oracle;
    uint64_t seed = 0;
    bool seed_set = false;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "JSON run configuration");
    cmd->add_option("--frames", flags.frames_dir, "Directory of frame_%04d.png anchors");
    cmd->add_option("--meshes", flags.meshes_dir, "Directory of mesh_%04d.obj references");
    cmd->add_option("--out", flags.out_dir, "Output directory");
    cmd->add_option("--oracle", flags.oracle, "mock or a denoiser endpoint URL");
    cmd->add_option("--seed", flags.seed, "Run seed")->each([&](const std::string&) {
        flags.seed_set = true;
    });
}

RunConfig resolve_config(const CommonFlags& flags) {
    RunConfig config =
        flags.config_path.empty() ? RunConfig{} : RunConfig::from_json_file(flags.config_path);
    if (!flags.frames_dir.empty()) config.frames_dir = flags.frames_dir;
    if (!flags.meshes_dir.empty()) config.meshes_dir = flags.meshes_dir;
    if (!flags.out_dir.empty()) config.out_dir = flags.out_dir;
    if (!flags.oracle.empty()) config.oracle = flags.oracle;
    if (flags.seed_set) config.seed = flags.seed;
    return config;
}

double focal_from_manifest(const std::string& out_dir) {
    std::ifstream is(fs::path(out_dir) / "manifest.json");
    if (!is) throw io_error("cannot read manifest.json in " + out_dir + "; run static first");
    nlohmann::json manifest = nlohmann::json::parse(is);
    return manifest.at("focal").get<double>();
}

void write_manifest(const RunConfig& config, double focal, const StageReport* stage1,
                    const StageReport* stage2) {
    nlohmann::json manifest;
    manifest["config"] = nlohmann::json::parse(config.to_json_text());
    manifest["focal"] = focal;
    if (stage1) {
        manifest["final_psnr"] = stage1->final_psnr;
        manifest["static_iterations"] = stage1->rows.size();
        manifest["static_seconds"] = stage1->wall_clock_seconds;
    }
    if (stage2) {
        manifest["dynamic_iterations"] = stage2->rows.size();
        manifest["dynamic_seconds"] = stage2->wall_clock_seconds;
    }
    fs::create_directories(config.out_dir);
    std::ofstream os(fs::path(config.out_dir) / "manifest.json");
    os << manifest.dump(2) << "\n";
}

int cmd_focal(const CommonFlags& flags) {
    RunConfig config = resolve_config(flags);
    VideoClip clip = ingest_anchor(config.frames_dir, config);
    auto meshes = ingest_meshes(config.meshes_dir, clip.frame_count());

    FocalSweepConfig sweep;
    sweep.initial_focal = config.focal_init > 0.0 ? config.focal_init : double(config.width);
    sweep.offset_min = std::max(config.focal_offset_min, -0.75 * sweep.initial_focal);
    sweep.offset_max = config.focal_offset_max;
    sweep.candidate_count = config.focal_candidates;
    sweep.coarse_to_fine = config.focal_coarse_to_fine;
    sweep.background = config.background;
    sweep.front_view = make_front_camera(config, sweep.initial_focal);
    if (!config.out_dir.empty()) {
        fs::create_directories(config.out_dir);
        sweep.diagnostics_csv = (fs::path(config.out_dir) / "focal_sweep.csv").string();
    }

    std::size_t frames_to_sweep = config.focal_per_frame ? clip.frame_count() : 1;
    for (std::size_t t = 0; t < frames_to_sweep; ++t) {
        FocalSweepResult result = sweep_focal(meshes[t], clip.frames[t], sweep);
        std::printf("frame %zu: focal %.6g px (best of %zu candidates)\n", t, result.focal,
                    result.candidates.size());
    }
    return 0;
}

int cmd_static(const CommonFlags& flags) {
    RunConfig config = resolve_config(flags);
    VideoClip clip = ingest_anchor(config.frames_dir, config);
    auto meshes = ingest_meshes(config.meshes_dir, clip.frame_count());
    StaticResult result = static_stage(clip, meshes, config);

    fs::create_directories(config.out_dir);
    export_ply(result.cloud, (fs::path(config.out_dir) / "cloud_static.ply").string());
    write_report_csv(result.report, (fs::path(config.out_dir) / "static_report.csv").string());
    write_manifest(config, result.focal, &result.report, nullptr);
    std::printf("static stage: %zu iterations, focal %.6g, front PSNR %.2f dB\n",
                result.report.rows.size(), result.focal, result.report.final_psnr);
    return 0;
}

int cmd_dynamic(const CommonFlags& flags) {
    RunConfig config = resolve_config(flags);
    VideoClip clip = ingest_anchor(config.frames_dir, config);
    double focal = focal_from_manifest(config.out_dir);
    GaussianCloud cloud = import_ply((fs::path(config.out_dir) / "cloud_static.ply").string());
    DynamicResult result = dynamic_stage(cloud, clip, config, focal);

    result.field.save((fs::path(config.out_dir) / "deform.bin").string());
    write_report_csv(result.report, (fs::path(config.out_dir) / "dynamic_report.csv").string());
    std::printf("dynamic stage: %zu iterations, final motion loss %.6g\n",
                result.report.rows.size(),
                result.report.rows.empty() ? 0.0 : result.report.rows.back().ma);
    return 0;
}

int cmd_run(const CommonFlags& flags) {
    RunConfig config = resolve_config(flags);
    RunResult result = run_pipeline(config);
    std::printf("run complete: focal %.6g, front PSNR %.2f dB, %zu + %zu iterations\n",
                result.focal, result.static_report.final_psnr, result.static_report.rows.size(),
                result.dynamic_report.rows.size());
    std::printf("outputs: %s, %s, %s\n", result.cloud_ply.c_str(),
                result.field_checkpoint.c_str(), result.manifest_json.c_str());
    return 0;
}

int cmd_render(const CommonFlags& flags) {
    RunConfig config = resolve_config(flags);
    double focal = focal_from_manifest(config.out_dir);
    GaussianCloud cloud = import_ply((fs::path(config.out_dir) / "cloud_static.ply").string());

    fs::path checkpoint = fs::path(config.out_dir) / "deform.bin";
    DeformationField field;
    if (fs::exists(checkpoint)) {
        field = DeformationField::load(checkpoint.string());
    } else {
        Rng rng(config.seed);
        field = DeformationField(config.deform, rng);  // identity
    }

    std::vector<double> times = normalized_timestamps(std::size_t(std::max(1, config.n_frames)));
    std::string out = (fs::path(config.out_dir) / "render").string();
    render_sequence(cloud, field, config, make_front_camera(config, focal), times, out);
    std::printf("wrote %zu frames to %s\n", times.size(), out.c_str());
    return 0;
}

int cmd_export(const CommonFlags& flags, double time) {
    RunConfig config = resolve_config(flags);
    GaussianCloud cloud = import_ply((fs::path(config.out_dir) / "cloud_static.ply").string());

    fs::path checkpoint = fs::path(config.out_dir) / "deform.bin";
    if (fs::exists(checkpoint) && time >= 0.0) {
        DeformationField field = DeformationField::load(checkpoint.string());
        cloud = deform(cloud, time, field);
    }
    std::string path = (fs::path(config.out_dir) / "export.ply").string();
    export_ply(cloud, path);
    std::printf("wrote %s (%zu points)\n", path.c_str(), cloud.size());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pixel-anchored 4D Gaussian splatting trainer"};
    app.require_subcommand(1);

    CommonFlags flags;
    double export_time = 0.0;

    CLI::App* focal = app.add_subcommand("focal", "Sweep candidate focal lengths");
    CLI::App* stat = app.add_subcommand("static", "Optimize the base Gaussian cloud");
    CLI::App* dynamic = app.add_subcommand("dynamic", "Train the deformation field");
    CLI::App* run = app.add_subcommand("run", "Full two-stage pipeline");
    CLI::App* render = app.add_subcommand("render", "Render the trained sequence");
    CLI::App* exp = app.add_subcommand("export", "Export the (deformed) cloud as PLY");
    for (CLI::App* cmd : {focal, stat, dynamic, run, render, exp}) add_common(cmd, flags);
    exp->add_option("--time", export_time, "Normalized time of the exported snapshot");

    CLI11_PARSE(app, argc, argv);

    try {
        if (focal->parsed()) return cmd_focal(flags);
        if (stat->parsed()) return cmd_static(flags);
        if (dynamic->parsed()) return cmd_dynamic(flags);
        if (run->parsed()) return cmd_run(flags);
        if (render->parsed()) return cmd_render(flags);
        if (exp->parsed()) return cmd_export(flags, export_time);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
