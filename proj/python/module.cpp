#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "splatalign/config.hpp"
#include "splatalign/deform.hpp"
#include "splatalign/errors.hpp"
#include "splatalign/focal.hpp"
#include "splatalign/guidance.hpp"
#include "splatalign/losses.hpp"
#include "splatalign/mesh_render.hpp"
#include "splatalign/pipeline.hpp"
#include "splatalign/ply_io.hpp"
#include "splatalign/render.hpp"
#include "splatalign/synth.hpp"

namespace py = pybind11;
using namespace splatalign;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

ImageBuffer image_from_numpy(const DoubleArray& rgba) {
    auto buf = rgba.unchecked<3>();
    if (buf.shape(2) != 3 && buf.shape(2) != 4)
        throw invalid_parameter_error("image must be HxWx3 or HxWx4");
    ImageBuffer img{int(buf.shape(1)), int(buf.shape(0))};
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            for (int c = 0; c < 3; ++c) img.at(x, y, c) = buf(y, x, c);
            img.a(x, y) = buf.shape(2) == 4 ? buf(y, x, 3) : 1.0;
        }
    return img;
}

py::array image_to_numpy(const ImageBuffer& img) {
    py::array_t<double> out({img.height, img.width, 4});
    auto buf = out.mutable_unchecked<3>();
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            for (int c = 0; c < 3; ++c) buf(y, x, c) = img.at(x, y, c);
            buf(y, x, 3) = img.a(x, y);
        }
    return out;
}

RgbField field_from_numpy(const DoubleArray& arr) {
    auto buf = arr.unchecked<3>();
    if (buf.shape(2) != 3) throw invalid_parameter_error("field must be HxWx3");
    RgbField field(int(buf.shape(1)), int(buf.shape(0)));
    for (int y = 0; y < field.height; ++y)
        for (int x = 0; x < field.width; ++x)
            for (int c = 0; c < 3; ++c) field.at(x, y, c) = buf(y, x, c);
    return field;
}

py::array field_to_numpy(const RgbField& field) {
    py::array_t<double> out({field.height, field.width, 3});
    auto buf = out.mutable_unchecked<3>();
    for (int y = 0; y < field.height; ++y)
        for (int x = 0; x < field.width; ++x)
            for (int c = 0; c < 3; ++c) buf(y, x, c) = field.at(x, y, c);
    return out;
}

GaussianCloud cloud_from_arrays(const DoubleArray& positions, const DoubleArray& rotations,
                                const DoubleArray& log_scales, const DoubleArray& colors,
                                const DoubleArray& opacity_logits) {
    auto pos = positions.unchecked<2>();
    auto rot = rotations.unchecked<2>();
    auto scl = log_scales.unchecked<2>();
    auto col = colors.unchecked<2>();
    auto opa = opacity_logits.unchecked<1>();
    const std::size_t n = pos.shape(0);
    if (rot.shape(0) != py::ssize_t(n) || scl.shape(0) != py::ssize_t(n) ||
        col.shape(0) != py::ssize_t(n) || opa.shape(0) != py::ssize_t(n))
        throw invalid_parameter_error("cloud arrays disagree on N");
    GaussianCloud cloud;
    cloud.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        cloud.positions[i] = {pos(i, 0), pos(i, 1), pos(i, 2)};
        cloud.rotations[i] = Quat{rot(i, 0), rot(i, 1), rot(i, 2), rot(i, 3)};
        cloud.log_scales[i] = {scl(i, 0), scl(i, 1), scl(i, 2)};
        cloud.colors[i] = {col(i, 0), col(i, 1), col(i, 2)};
        cloud.opacity_logits[i] = opa(i);
    }
    return cloud;
}

TriMesh mesh_from_arrays(const DoubleArray& vertices,
                         const py::array_t<int, py::array::c_style | py::array::forcecast>& tris,
                         const DoubleArray& colors) {
    auto v = vertices.unchecked<2>();
    auto t = tris.unchecked<2>();
    auto c = colors.unchecked<2>();
    TriMesh mesh;
    for (py::ssize_t i = 0; i < v.shape(0); ++i) {
        mesh.vertices.push_back({v(i, 0), v(i, 1), v(i, 2)});
        mesh.vertex_colors.push_back({c(i, 0), c(i, 1), c(i, 2)});
    }
    for (py::ssize_t i = 0; i < t.shape(0); ++i)
        mesh.triangles.push_back({t(i, 0), t(i, 1), t(i, 2)});
    return mesh;
}

RenderSettings settings_of(const DoubleArray& background, int threads) {
    auto bg = background.unchecked<1>();
    RenderSettings settings;
    settings.background = {bg(0), bg(1), bg(2)};
    settings.threads = threads;
    return settings;
}

}  // namespace

PYBIND11_MODULE(_splatalign, m) {
    m.doc() = "Differentiable Gaussian splatting with pixel-anchored 4D alignment";

    py::register_exception<invalid_parameter_error>(m, "InvalidParameterError",
                                                    PyExc_ValueError);
    py::register_exception<numeric_overflow_error>(m, "NumericOverflowError",
                                                   PyExc_ArithmeticError);
    py::register_exception<oracle_unavailable_error>(m, "OracleUnavailableError",
                                                     PyExc_ConnectionError);
    py::register_exception<ingestion_error>(m, "IngestionError", PyExc_ValueError);
    py::register_exception<io_error>(m, "IoError", PyExc_OSError);

    py::class_<GaussianCloud>(m, "GaussianCloud")
        .def(py::init(&cloud_from_arrays), py::arg("positions"), py::arg("rotations"),
             py::arg("log_scales"), py::arg("colors"), py::arg("opacity_logits"))
        .def("__len__", &GaussianCloud::size)
        .def_property_readonly("positions",
                               [](const GaussianCloud& c) {
                                   py::array_t<double> out({py::ssize_t(c.size()), py::ssize_t(3)});
                                   auto buf = out.mutable_unchecked<2>();
                                   for (std::size_t i = 0; i < c.size(); ++i) {
                                       buf(i, 0) = c.positions[i].x;
                                       buf(i, 1) = c.positions[i].y;
                                       buf(i, 2) = c.positions[i].z;
                                   }
                                   return out;
                               })
        .def_property_readonly("colors",
                               [](const GaussianCloud& c) {
                                   py::array_t<double> out({py::ssize_t(c.size()), py::ssize_t(3)});
                                   auto buf = out.mutable_unchecked<2>();
                                   for (std::size_t i = 0; i < c.size(); ++i) {
                                       buf(i, 0) = c.colors[i].x;
                                       buf(i, 1) = c.colors[i].y;
                                       buf(i, 2) = c.colors[i].z;
                                   }
                                   return out;
                               });

    py::class_<Camera>(m, "Camera")
        .def_readonly("focal", &Camera::focal)
        .def_readonly("width", &Camera::width)
        .def_readonly("height", &Camera::height);

    m.def("orbit_camera", &orbit_camera, py::arg("azimuth"), py::arg("elevation"),
          py::arg("radius"), py::arg("focal"), py::arg("width"), py::arg("height"),
          py::arg("z_near") = 0.01);

    m.def("covariance_of", [](const DoubleArray& quat, const DoubleArray& log_scale) {
        auto q = quat.unchecked<1>();
        auto s = log_scale.unchecked<1>();
        Mat3 cov = covariance_of(Quat{q(0), q(1), q(2), q(3)}, Vec3{s(0), s(1), s(2)});
        py::array_t<double> out({3, 3});
        auto buf = out.mutable_unchecked<2>();
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) buf(i, j) = cov(i, j);
        return out;
    });

    m.def("validate_cloud", &validate_cloud);

    m.def(
        "render",
        [](const GaussianCloud& cloud, const Camera& camera, const DoubleArray& background,
           int threads) { return image_to_numpy(render(cloud, camera, settings_of(background, threads))); },
        py::arg("cloud"), py::arg("camera"),
        py::arg("background") = DoubleArray(py::cast(std::vector<double>{0, 0, 0})),
        py::arg("threads") = 1);

    m.def(
        "render_backward",
        [](const GaussianCloud& cloud, const Camera& camera, const DoubleArray& upstream_rgba,
           const DoubleArray& background, int threads) {
            auto buf = upstream_rgba.unchecked<3>();
            RgbField up_rgb(int(buf.shape(1)), int(buf.shape(0)));
            ScalarField up_alpha(int(buf.shape(1)), int(buf.shape(0)));
            for (int y = 0; y < up_rgb.height; ++y)
                for (int x = 0; x < up_rgb.width; ++x) {
                    for (int c = 0; c < 3; ++c) up_rgb.at(x, y, c) = buf(y, x, c);
                    up_alpha.at(x, y) = buf.shape(2) == 4 ? buf(y, x, 3) : 0.0;
                }
            RenderGrads grads =
                render_backward(cloud, camera, up_rgb, up_alpha, settings_of(background, threads));

            const std::size_t n = cloud.size();
            py::dict out;
            py::array_t<double> positions({py::ssize_t(n), py::ssize_t(3)});
            py::array_t<double> rotations({py::ssize_t(n), py::ssize_t(4)});
            py::array_t<double> log_scales({py::ssize_t(n), py::ssize_t(3)});
            py::array_t<double> colors({py::ssize_t(n), py::ssize_t(3)});
            py::array_t<double> opacity(std::vector<py::ssize_t>{py::ssize_t(n)});
            auto bp = positions.mutable_unchecked<2>();
            auto br = rotations.mutable_unchecked<2>();
            auto bs = log_scales.mutable_unchecked<2>();
            auto bc = colors.mutable_unchecked<2>();
            auto bo = opacity.mutable_unchecked<1>();
            for (std::size_t i = 0; i < n; ++i) {
                bp(i, 0) = grads.positions[i].x;
                bp(i, 1) = grads.positions[i].y;
                bp(i, 2) = grads.positions[i].z;
                for (int k = 0; k < 4; ++k) br(i, k) = grads.rotations[i][k];
                bs(i, 0) = grads.log_scales[i].x;
                bs(i, 1) = grads.log_scales[i].y;
                bs(i, 2) = grads.log_scales[i].z;
                bc(i, 0) = grads.colors[i].x;
                bc(i, 1) = grads.colors[i].y;
                bc(i, 2) = grads.colors[i].z;
                bo(i) = grads.opacity_logits[i];
            }
            out["positions"] = positions;
            out["rotations"] = rotations;
            out["log_scales"] = log_scales;
            out["colors"] = colors;
            out["opacity_logits"] = opacity;
            return out;
        },
        py::arg("cloud"), py::arg("camera"), py::arg("upstream_rgba"),
        py::arg("background") = DoubleArray(py::cast(std::vector<double>{0, 0, 0})),
        py::arg("threads") = 1);

    m.def(
        "render_mesh",
        [](const DoubleArray& vertices,
           const py::array_t<int, py::array::c_style | py::array::forcecast>& triangles,
           const DoubleArray& colors, const Camera& camera, const DoubleArray& background) {
            auto bg = background.unchecked<1>();
            return image_to_numpy(render_mesh(mesh_from_arrays(vertices, triangles, colors),
                                              camera, Vec3{bg(0), bg(1), bg(2)}));
        },
        py::arg("vertices"), py::arg("triangles"), py::arg("vertex_colors"), py::arg("camera"),
        py::arg("background") = DoubleArray(py::cast(std::vector<double>{0, 0, 0})));

    m.def("positional_encoding", [](const std::vector<double>& v, int count) {
        return positional_encoding(v, count);
    });

    py::class_<DeformationField>(m, "DeformationField")
        .def(py::init([](int hidden_width, int freq_position, int freq_time, uint64_t seed) {
                 DeformationField::Config config;
                 config.hidden_width = hidden_width;
                 config.freq_position = freq_position;
                 config.freq_time = freq_time;
                 Rng rng(seed);
                 return DeformationField(config, rng);
             }),
             py::arg("hidden_width") = 64, py::arg("freq_position") = 6,
             py::arg("freq_time") = 4, py::arg("seed") = 0)
        .def("save", &DeformationField::save)
        .def_static("load", &DeformationField::load)
        .def("parameter_count", &DeformationField::parameter_count);

    m.def("deform", &deform, py::arg("cloud"), py::arg("t"), py::arg("field"));

    py::class_<DiffusionSchedule>(m, "DiffusionSchedule")
        .def_static("cosine", &DiffusionSchedule::cosine, py::arg("t_max") = 1000)
        .def_readonly("t_max", &DiffusionSchedule::t_max)
        .def_readonly("alpha", &DiffusionSchedule::alpha)
        .def_readonly("sigma", &DiffusionSchedule::sigma);

    m.def("mse_loss", [](const DoubleArray& a, const DoubleArray& b) {
        LossValue loss = mse_loss(image_from_numpy(a), image_from_numpy(b));
        return py::make_tuple(loss.value, field_to_numpy(loss.grads[0].rgb));
    });
    m.def("mask_loss", [](const DoubleArray& a, const DoubleArray& b) {
        LossValue loss = mask_loss(image_from_numpy(a), image_from_numpy(b));
        return loss.value;
    });
    m.def(
        "perceptual_loss",
        [](const DoubleArray& a, const DoubleArray& b, uint64_t seed) {
            FeatureStack stack(seed);
            LossValue loss = perceptual_loss(image_from_numpy(a), image_from_numpy(b), stack);
            return py::make_tuple(loss.value, field_to_numpy(loss.grads[0].rgb));
        },
        py::arg("a"), py::arg("b"), py::arg("stack_seed") = 17);
    m.def(
        "texture_alignment",
        [](const DoubleArray& x, const DoubleArray& anchor, double lam, uint64_t seed) {
            FeatureStack stack(seed);
            LossValue loss =
                texture_alignment(image_from_numpy(x), image_from_numpy(anchor), lam, stack);
            return py::make_tuple(loss.value, field_to_numpy(loss.grads[0].rgb));
        },
        py::arg("x"), py::arg("anchor"), py::arg("lambda_lpips") = 0.1,
        py::arg("stack_seed") = 17);

    m.def(
        "add_noise",
        [](const DoubleArray& x, int tau, const DoubleArray& eps,
           const DiffusionSchedule& schedule) {
            return field_to_numpy(add_noise(image_from_numpy(x), tau, field_from_numpy(eps),
                                            schedule));
        },
        py::arg("x"), py::arg("tau"), py::arg("eps"), py::arg("schedule"));

    m.def(
        "sds_gradient_mock",
        [](const DoubleArray& x, const DoubleArray& target, int tau, const DoubleArray& eps,
           const DiffusionSchedule& schedule) {
            MockTargetOracle oracle(field_from_numpy(target), schedule);
            return field_to_numpy(sds_gradient(image_from_numpy(x), oracle, Condition{}, tau,
                                               field_from_numpy(eps), schedule));
        },
        py::arg("x"), py::arg("target"), py::arg("tau"), py::arg("eps"), py::arg("schedule"));

    m.def(
        "sweep_focal",
        [](const DoubleArray& vertices,
           const py::array_t<int, py::array::c_style | py::array::forcecast>& triangles,
           const DoubleArray& colors, const DoubleArray& frame, double initial_focal,
           double offset_min, double offset_max, int candidates, double radius) {
            ImageBuffer target = image_from_numpy(frame);
            FocalSweepConfig config;
            config.initial_focal = initial_focal;
            config.offset_min = offset_min;
            config.offset_max = offset_max;
            config.candidate_count = candidates;
            config.front_view = orbit_camera(0.0, 0.0, radius, initial_focal, target.width,
                                             target.height, 0.05);
            FocalSweepResult result =
                sweep_focal(mesh_from_arrays(vertices, triangles, colors), target, config);
            return py::make_tuple(result.focal, result.candidates, result.mse);
        },
        py::arg("vertices"), py::arg("triangles"), py::arg("vertex_colors"), py::arg("frame"),
        py::arg("initial_focal"), py::arg("offset_min") = -64.0, py::arg("offset_max") = 64.0,
        py::arg("candidates") = 33, py::arg("radius") = 2.4);

    m.def("jitter_focal", &jitter_focal, py::arg("focal"), py::arg("magnitude"),
          py::arg("seed"));

    m.def("export_ply", &export_ply, py::arg("cloud"), py::arg("path"));
    m.def("import_ply", &import_ply, py::arg("path"));

    m.def(
        "write_synthetic_fixture",
        [](uint64_t seed, const std::string& frames_dir, const std::string& meshes_dir,
           int width, int height, int n_frames) {
            RunConfig config;
            config.width = width;
            config.height = height;
            config.n_frames = n_frames;
            config.seed = seed;
            SynthFixture fixture = synth_anchor(seed, config);
            write_fixture(fixture, frames_dir, meshes_dir);
            return fixture.focal;
        },
        py::arg("seed"), py::arg("frames_dir"), py::arg("meshes_dir"), py::arg("width") = 64,
        py::arg("height") = 64, py::arg("n_frames") = 8);

    m.def(
        "run_pipeline",
        [](const std::string& config_json) {
            RunConfig config = RunConfig::from_json_text(config_json);
            RunResult result = run_pipeline(config);
            py::dict out;
            out["focal"] = result.focal;
            out["final_psnr"] = result.static_report.final_psnr;
            out["static_iterations"] = result.static_report.rows.size();
            out["dynamic_iterations"] = result.dynamic_report.rows.size();
            out["cloud_ply"] = result.cloud_ply;
            out["field_checkpoint"] = result.field_checkpoint;
            out["manifest_json"] = result.manifest_json;
            return out;
        },
        py::arg("config_json"));

    m.def("default_config_json", [] { return RunConfig{}.to_json_text(); });
}
