#include "splatalign/render.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "splatalign/errors.hpp"
#include "splatalign/parallel.hpp"

namespace splatalign {

namespace {

constexpr double kEarlyStopTransmittance = 1e-12;

struct Mat2 {
    double m00 = 0, m01 = 0, m10 = 0, m11 = 0;
};

// Sorted, tile-binned snapshot of the projected cloud shared by the forward
// and backward passes.
struct Prepared {
    std::vector<Splat2D> splats;      // depth order
    std::vector<int> point_index;     // depth order -> cloud index
    int tiles_x = 0, tiles_y = 0;
    std::vector<std::vector<int>> tile_lists;  // indices into `splats`
};

Prepared prepare(const GaussianCloud& cloud, const Camera& camera,
                 const RenderSettings& settings) {
    Prepared prep;
    const std::size_t n = cloud.size();
    std::vector<std::pair<double, int>> order;
    std::vector<Splat2D> projected;
    order.reserve(n);
    projected.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Mat3 cov = covariance_of(cloud.rotations[i], cloud.log_scales[i]);
        auto splat = project_gaussian(cloud.positions[i], cov, camera, settings);
        if (!splat) continue;
        splat->color = {clamp01(cloud.colors[i].x), clamp01(cloud.colors[i].y),
                        clamp01(cloud.colors[i].z)};
        splat->opacity = sigmoid(cloud.opacity_logits[i]);
        order.emplace_back(splat->depth, int(i));
        projected.push_back(*splat);
    }
    std::vector<int> perm(order.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::sort(perm.begin(), perm.end(), [&](int a, int b) {
        if (order[a].first != order[b].first) return order[a].first < order[b].first;
        return order[a].second < order[b].second;  // tie-break by point index
    });
    prep.splats.reserve(perm.size());
    prep.point_index.reserve(perm.size());
    for (int k : perm) {
        prep.splats.push_back(projected[k]);
        prep.point_index.push_back(order[k].second);
    }

    prep.tiles_x = (camera.width + settings.tile_size - 1) / settings.tile_size;
    prep.tiles_y = (camera.height + settings.tile_size - 1) / settings.tile_size;
    prep.tile_lists.assign(std::size_t(prep.tiles_x) * prep.tiles_y, {});
    for (std::size_t s = 0; s < prep.splats.size(); ++s) {
        const Splat2D& sp = prep.splats[s];
        int x0 = std::max(0, int(std::floor((sp.mean.x - sp.radius) / settings.tile_size)));
        int x1 = std::min(prep.tiles_x - 1,
                          int(std::floor((sp.mean.x + sp.radius) / settings.tile_size)));
        int y0 = std::max(0, int(std::floor((sp.mean.y - sp.radius) / settings.tile_size)));
        int y1 = std::min(prep.tiles_y - 1,
                          int(std::floor((sp.mean.y + sp.radius) / settings.tile_size)));
        for (int ty = y0; ty <= y1; ++ty)
            for (int tx = x0; tx <= x1; ++tx)
                prep.tile_lists[std::size_t(ty) * prep.tiles_x + tx].push_back(int(s));
    }
    return prep;
}

// Walks the splats covering one pixel in depth order, exactly as the forward
// blend does (3-sigma support, eta clamp, early stop). visit(list_pos, eta,
// transmittance_before) is called for each contributing splat.
template <typename Visit>
double walk_pixel(const Prepared& prep, const std::vector<int>& list, double px, double py,
                  const RenderSettings& settings, Visit&& visit) {
    const double m_max = settings.cutoff_sigma * settings.cutoff_sigma;
    double transmittance = 1.0;
    for (std::size_t k = 0; k < list.size(); ++k) {
        const Splat2D& sp = prep.splats[list[k]];
        double dx = px - sp.mean.x;
        double dy = py - sp.mean.y;
        double m = sp.conic_a * dx * dx + 2.0 * sp.conic_b * dx * dy + sp.conic_c * dy * dy;
        if (m > m_max) continue;
        double eta = sp.opacity * std::exp(-0.5 * m);
        if (eta > settings.eta_max) eta = settings.eta_max;
        visit(k, eta, transmittance);
        transmittance *= 1.0 - eta;
        if (transmittance < kEarlyStopTransmittance) break;
    }
    return transmittance;
}

void throw_if_invalid(const GaussianCloud& cloud, const char* op) {
    auto violations = validate_cloud(cloud);
    if (!violations.empty())
        throw invalid_parameter_error(std::string(op) + ": invalid cloud: " + violations.front());
}

// d(quaternion-normalized rotation matrix)/d(raw quaternion), contracted with
// an upstream full-matrix gradient on R.
std::array<double, 4> rotation_backward(const Quat& raw, const Mat3& g_r) {
    Quat qn = raw.normalized();
    const double w = qn.w, x = qn.x, y = qn.y, z = qn.z;
    Mat3 dw, dx, dy, dz;
    dw.m = {0, -2 * z, 2 * y, 2 * z, 0, -2 * x, -2 * y, 2 * x, 0};
    dx.m = {0, 2 * y, 2 * z, 2 * y, -4 * x, -2 * w, 2 * z, 2 * w, -4 * x};
    dy.m = {-4 * y, 2 * x, 2 * w, 2 * x, 0, 2 * z, -2 * w, 2 * z, -4 * y};
    dz.m = {-4 * z, -2 * w, 2 * x, 2 * w, -4 * z, 2 * y, 2 * x, 2 * y, 0};
    auto contract = [&](const Mat3& d) {
        double s = 0.0;
        for (int i = 0; i < 9; ++i) s += g_r.m[i] * d.m[i];
        return s;
    };
    std::array<double, 4> g_qn{contract(dw), contract(dx), contract(dy), contract(dz)};
    // Through the normalization q_n = q / |q|.
    double n = raw.norm();
    double dot = g_qn[0] * w + g_qn[1] * x + g_qn[2] * y + g_qn[3] * z;
    return {(g_qn[0] - w * dot) / n, (g_qn[1] - x * dot) / n, (g_qn[2] - y * dot) / n,
            (g_qn[3] - z * dot) / n};
}

}  // namespace

RenderGrads& RenderGrads::operator+=(const RenderGrads& o) {
    for (std::size_t i = 0; i < positions.size(); ++i) {
        positions[i] += o.positions[i];
        for (int k = 0; k < 4; ++k) rotations[i][k] += o.rotations[i][k];
        log_scales[i] += o.log_scales[i];
        colors[i] += o.colors[i];
        opacity_logits[i] += o.opacity_logits[i];
    }
    return *this;
}

bool RenderGrads::finite() const {
    for (std::size_t i = 0; i < positions.size(); ++i) {
        if (!positions[i].finite() || !log_scales[i].finite() || !colors[i].finite()) return false;
        if (!std::isfinite(opacity_logits[i])) return false;
        for (double v : rotations[i])
            if (!std::isfinite(v)) return false;
    }
    return true;
}

std::optional<Splat2D> project_gaussian(const Vec3& mean, const Mat3& covariance,
                                        const Camera& camera, const RenderSettings& settings) {
    if (!mean.finite() || !covariance.finite())
        throw invalid_parameter_error("project_gaussian: non-finite input");
    Vec3 pc = camera.to_camera(mean);
    if (pc.z < camera.z_near) return std::nullopt;  // culled

    const double f = camera.focal;
    const double inv_z = 1.0 / pc.z;
    const double inv_z2 = inv_z * inv_z;
    // Perspective Jacobian at the point (EWA linearization).
    const double j00 = f * inv_z, j02 = -f * pc.x * inv_z2;
    const double j11 = f * inv_z, j12 = -f * pc.y * inv_z2;

    Mat3 cov_cam = camera.rotation * covariance * camera.rotation.transposed();
    // S = J * cov_cam * J^T with the sparse 2x3 Jacobian above.
    double s00 = j00 * (j00 * cov_cam(0, 0) + j02 * cov_cam(2, 0)) +
                 j02 * (j00 * cov_cam(0, 2) + j02 * cov_cam(2, 2));
    double s01 = j11 * (j00 * cov_cam(0, 1) + j02 * cov_cam(2, 1)) +
                 j12 * (j00 * cov_cam(0, 2) + j02 * cov_cam(2, 2));
    double s11 = j11 * (j11 * cov_cam(1, 1) + j12 * cov_cam(2, 1)) +
                 j12 * (j11 * cov_cam(1, 2) + j12 * cov_cam(2, 2));
    s00 += settings.conic_dilation;
    s11 += settings.conic_dilation;

    double det = s00 * s11 - s01 * s01;
    if (!(det > 0.0) || !std::isfinite(det)) return std::nullopt;

    Splat2D out;
    out.mean = {f * pc.x * inv_z + camera.cx, f * pc.y * inv_z + camera.cy};
    out.conic_a = s11 / det;
    out.conic_b = -s01 / det;
    out.conic_c = s00 / det;
    out.depth = pc.z;
    double mid = 0.5 * (s00 + s11);
    double lambda_max = mid + std::sqrt(std::max(0.0, mid * mid - det));
    out.radius = settings.cutoff_sigma * std::sqrt(lambda_max);
    return out;
}

ImageBuffer render(const GaussianCloud& cloud, const Camera& camera,
                   const RenderSettings& settings) {
    throw_if_invalid(cloud, "render");
    if (camera.width <= 0 || camera.height <= 0 || camera.focal <= 0.0)
        throw invalid_parameter_error("render: invalid camera");

    Prepared prep = prepare(cloud, camera, settings);
    ImageBuffer image(camera.width, camera.height);
    const Vec3 bg = settings.background;

    parallel_for(std::size_t(camera.height), settings.threads, [&](std::size_t row) {
        int y = int(row);
        for (int x = 0; x < camera.width; ++x) {
            const auto& list =
                prep.tile_lists[std::size_t(y / settings.tile_size) * prep.tiles_x +
                                x / settings.tile_size];
            double px = x + 0.5, py = y + 0.5;
            Vec3 color{};
            double t_final = walk_pixel(prep, list, px, py, settings,
                                        [&](std::size_t k, double eta, double t_before) {
                                            const Splat2D& sp = prep.splats[list[k]];
                                            color += sp.color * (eta * t_before);
                                        });
            color += bg * t_final;
            image.at(x, y, 0) = color.x;
            image.at(x, y, 1) = color.y;
            image.at(x, y, 2) = color.z;
            image.a(x, y) = 1.0 - t_final;
        }
    });
    return image;
}

RenderGrads render_backward(const GaussianCloud& cloud, const Camera& camera,
                            const RgbField& upstream_rgb, const ScalarField& upstream_alpha,
                            const RenderSettings& settings) {
    throw_if_invalid(cloud, "render_backward");
    if (upstream_rgb.width != camera.width || upstream_rgb.height != camera.height ||
        upstream_alpha.width != camera.width || upstream_alpha.height != camera.height)
        throw invalid_parameter_error("render_backward: upstream shape does not match camera");

    Prepared prep = prepare(cloud, camera, settings);
    const Vec3 bg = settings.background;

    // Screen-space gradient record per projected splat.
    struct SplatGrad {
        double mean_x = 0, mean_y = 0;
        double conic_a = 0, conic_b = 0, conic_c = 0;  // wrt the packed conic (a, b, c)
        Vec3 color{};
        double alpha = 0;
    };

    const std::size_t n_tiles = prep.tile_lists.size();
    std::vector<std::vector<SplatGrad>> tile_grads(n_tiles);

    parallel_for(n_tiles, settings.threads, [&](std::size_t tile) {
        const auto& list = prep.tile_lists[tile];
        if (list.empty()) return;
        auto& grads = tile_grads[tile];
        grads.assign(list.size(), SplatGrad{});

        int tx = int(tile % prep.tiles_x), ty = int(tile / prep.tiles_x);
        int x0 = tx * settings.tile_size, x1 = std::min(camera.width, x0 + settings.tile_size);
        int y0 = ty * settings.tile_size, y1 = std::min(camera.height, y0 + settings.tile_size);

        std::vector<std::size_t> hit_pos;  // list positions of contributing splats
        std::vector<double> hit_eta;
        std::vector<double> t_befores;
        for (int y = y0; y < y1; ++y) {
            for (int x = x0; x < x1; ++x) {
                double px = x + 0.5, py = y + 0.5;
                hit_pos.clear();
                hit_eta.clear();
                t_befores.clear();
                double t_final = walk_pixel(prep, list, px, py, settings,
                                            [&](std::size_t k, double eta, double t_before) {
                                                hit_pos.push_back(k);
                                                hit_eta.push_back(eta);
                                                t_befores.push_back(t_before);
                                            });
                if (hit_pos.empty()) continue;

                Vec3 g_c{upstream_rgb.at(x, y, 0), upstream_rgb.at(x, y, 1),
                         upstream_rgb.at(x, y, 2)};
                double g_a = upstream_alpha.at(x, y);

                // Reverse sweep: suffix accumulates the blended color behind
                // the current splat.
                Vec3 suffix = bg * t_final;
                for (std::size_t h = hit_pos.size(); h-- > 0;) {
                    std::size_t k = hit_pos[h];
                    double eta = hit_eta[h];
                    double t_before = t_befores[h];
                    const Splat2D& sp = prep.splats[list[k]];
                    SplatGrad& sg = grads[k];

                    double one_minus = 1.0 - eta;
                    Vec3 d_color_d_eta = sp.color * t_before - suffix * (1.0 / one_minus);
                    double g_eta = g_c.dot(d_color_d_eta) + g_a * t_final / one_minus;

                    double w = eta * t_before;
                    sg.color += g_c * w;
                    suffix += sp.color * w;

                    // eta = min(opacity * G, eta_max); clamped region has zero slope.
                    double dx = px - sp.mean.x, dy = py - sp.mean.y;
                    double m = sp.conic_a * dx * dx + 2.0 * sp.conic_b * dx * dy +
                               sp.conic_c * dy * dy;
                    double gauss = std::exp(-0.5 * m);
                    if (sp.opacity * gauss > settings.eta_max) continue;

                    sg.alpha += g_eta * gauss;
                    double g_m = -0.5 * sp.opacity * gauss * g_eta;
                    sg.conic_a += g_m * dx * dx;
                    sg.conic_b += g_m * 2.0 * dx * dy;
                    sg.conic_c += g_m * dy * dy;
                    double g_dx = g_m * 2.0 * (sp.conic_a * dx + sp.conic_b * dy);
                    double g_dy = g_m * 2.0 * (sp.conic_b * dx + sp.conic_c * dy);
                    sg.mean_x -= g_dx;
                    sg.mean_y -= g_dy;
                }
            }
        }
    });

    // Ordered reduction: tile index, then list position. Bitwise-stable for
    // any thread count.
    std::vector<SplatGrad> per_splat(prep.splats.size());
    for (std::size_t tile = 0; tile < n_tiles; ++tile) {
        const auto& list = prep.tile_lists[tile];
        const auto& grads = tile_grads[tile];
        for (std::size_t k = 0; k < grads.size(); ++k) {
            SplatGrad& acc = per_splat[list[k]];
            const SplatGrad& g = grads[k];
            acc.mean_x += g.mean_x;
            acc.mean_y += g.mean_y;
            acc.conic_a += g.conic_a;
            acc.conic_b += g.conic_b;
            acc.conic_c += g.conic_c;
            acc.color += g.color;
            acc.alpha += g.alpha;
        }
    }

    RenderGrads out(cloud.size());
    parallel_for(prep.splats.size(), settings.threads, [&](std::size_t s) {
        const SplatGrad& sg = per_splat[s];
        const int i = prep.point_index[s];
        const Splat2D& sp = prep.splats[s];

        // Color gradient passes through the render-time clamp.
        Vec3 g_col = sg.color;
        const Vec3& raw_col = cloud.colors[i];
        out.colors[i] = {raw_col.x >= 0.0 && raw_col.x <= 1.0 ? g_col.x : 0.0,
                         raw_col.y >= 0.0 && raw_col.y <= 1.0 ? g_col.y : 0.0,
                         raw_col.z >= 0.0 && raw_col.z <= 1.0 ? g_col.z : 0.0};
        out.opacity_logits[i] = sg.alpha * sp.opacity * (1.0 - sp.opacity);

        // Conic A = S^{-1}: dL/dS = -A G_A A with the full-matrix gradient.
        Mat2 g_conic{sg.conic_a, 0.5 * sg.conic_b, 0.5 * sg.conic_b, sg.conic_c};
        Mat2 a{sp.conic_a, sp.conic_b, sp.conic_b, sp.conic_c};
        auto mul2 = [](const Mat2& l, const Mat2& r) {
            return Mat2{l.m00 * r.m00 + l.m01 * r.m10, l.m00 * r.m01 + l.m01 * r.m11,
                        l.m10 * r.m00 + l.m11 * r.m10, l.m10 * r.m01 + l.m11 * r.m11};
        };
        Mat2 g_s = mul2(mul2(a, g_conic), a);
        g_s = {-g_s.m00, -g_s.m01, -g_s.m10, -g_s.m11};

        // Recompute the projection intermediates for this point.
        Vec3 pc = camera.to_camera(cloud.positions[i]);
        const double f = camera.focal;
        const double inv_z = 1.0 / pc.z, inv_z2 = inv_z * inv_z;
        const double j00 = f * inv_z, j02 = -f * pc.x * inv_z2;
        const double j11 = f * inv_z, j12 = -f * pc.y * inv_z2;
        Mat3 cov = covariance_of(cloud.rotations[i], cloud.log_scales[i]);
        Mat3 cov_cam = camera.rotation * cov * camera.rotation.transposed();

        // dL/dSigma_cam = J^T G_S J (J is the sparse 2x3 Jacobian).
        Mat3 g_cov_cam = Mat3::zero();
        const double jr0[3] = {j00, 0.0, j02};
        const double jr1[3] = {0.0, j11, j12};
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                g_cov_cam(r, c) = jr0[r] * (g_s.m00 * jr0[c] + g_s.m01 * jr1[c]) +
                                  jr1[r] * (g_s.m10 * jr0[c] + g_s.m11 * jr1[c]);

        // dL/dJ = G_S J Sigma_cam^T + G_S^T J Sigma_cam (entries 00, 02, 11, 12).
        auto j_row = [&](int r, int c) { return r == 0 ? jr0[c] : jr1[c]; };
        double g_j[2][3] = {{0, 0, 0}, {0, 0, 0}};
        for (int p = 0; p < 2; ++p)
            for (int q = 0; q < 3; ++q) {
                double acc = 0.0;
                for (int j = 0; j < 2; ++j)
                    for (int l = 0; l < 3; ++l) {
                        double gs_pj = (p == 0 ? (j == 0 ? g_s.m00 : g_s.m01)
                                               : (j == 0 ? g_s.m10 : g_s.m11));
                        double gs_jp = (j == 0 ? (p == 0 ? g_s.m00 : g_s.m01)
                                               : (p == 0 ? g_s.m10 : g_s.m11));
                        acc += gs_pj * j_row(j, l) * cov_cam(q, l);
                        acc += gs_jp * j_row(j, l) * cov_cam(l, q);
                    }
                g_j[p][q] = acc;
            }

        // Camera-space point gradient: through the projected mean and J.
        Vec3 g_pc{};
        g_pc.x += j00 * sg.mean_x;
        g_pc.y += j11 * sg.mean_y;
        g_pc.z += j02 * sg.mean_x + j12 * sg.mean_y;
        g_pc.x += g_j[0][2] * (-f * inv_z2);
        g_pc.y += g_j[1][2] * (-f * inv_z2);
        g_pc.z += (g_j[0][0] + g_j[1][1]) * (-f * inv_z2) +
                  g_j[0][2] * (2.0 * f * pc.x * inv_z2 * inv_z) +
                  g_j[1][2] * (2.0 * f * pc.y * inv_z2 * inv_z);
        out.positions[i] = camera.rotation.transposed() * g_pc;

        // dL/dSigma = W^T G_cov_cam W, then through Sigma = R diag(e^{2s}) R^T.
        Mat3 g_cov = camera.rotation.transposed() * g_cov_cam * camera.rotation;
        Quat qn = cloud.rotations[i].normalized();
        Mat3 rot = rotation_matrix(qn);
        const Vec3& ls = cloud.log_scales[i];
        Vec3 d{std::exp(2.0 * ls.x), std::exp(2.0 * ls.y), std::exp(2.0 * ls.z)};

        Mat3 g_r = Mat3::zero();
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int j = 0; j < 3; ++j)
                    acc += (g_cov(r, j) + g_cov(j, r)) * rot(j, c);
                g_r(r, c) = acc * d[c];
            }
        out.rotations[i] = rotation_backward(cloud.rotations[i], g_r);

        Mat3 rt_g_r = rot.transposed() * g_cov * rot;
        out.log_scales[i] = {2.0 * d.x * rt_g_r(0, 0), 2.0 * d.y * rt_g_r(1, 1),
                             2.0 * d.z * rt_g_r(2, 2)};
    });
    return out;
}

}  // namespace splatalign
