#include "splatalign/optimizer.hpp"

#include <cmath>

#include "splatalign/errors.hpp"
#include "splatalign/render.hpp"

namespace splatalign {

void adam_step(std::span<double> params, std::span<const double> grads, OptimizerState& state,
               double rate, const AdamSettings& settings) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw invalid_parameter_error("adam_step: shape mismatch");
    for (double g : grads)
        if (!std::isfinite(g)) throw numeric_overflow_error("adam_step: non-finite gradient");

    state.step += 1;
    const double bc1 = 1.0 - std::pow(settings.beta1, double(state.step));
    const double bc2 = 1.0 - std::pow(settings.beta2, double(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = settings.beta1 * state.m[i] + (1.0 - settings.beta1) * grads[i];
        state.v[i] = settings.beta2 * state.v[i] + (1.0 - settings.beta2) * grads[i] * grads[i];
        double m_hat = state.m[i] / bc1;
        double v_hat = state.v[i] / bc2;
        params[i] -= rate * m_hat / (std::sqrt(v_hat) + settings.epsilon);
    }
}

CloudOptimizer::CloudOptimizer(GaussianCloud& cloud, const Rates& rates, double scene_extent,
                               const AdamSettings& settings)
    : cloud_(cloud),
      rates_(rates),
      scene_extent_(scene_extent),
      settings_(settings),
      positions_(cloud.size() * 3),
      rotations_(cloud.size() * 4),
      log_scales_(cloud.size() * 3),
      colors_(cloud.size() * 3),
      opacities_(cloud.size()) {}

void CloudOptimizer::step(const RenderGrads& grads) {
    const std::size_t n = cloud_.size();
    if (grads.positions.size() != n) throw invalid_parameter_error("CloudOptimizer: grad shape");

    // Vec3/Quat fields are plain contiguous doubles; update them as flat spans.
    static_assert(sizeof(Vec3) == 3 * sizeof(double));
    static_assert(sizeof(Quat) == 4 * sizeof(double));
    static_assert(sizeof(std::array<double, 4>) == 4 * sizeof(double));

    adam_step({reinterpret_cast<double*>(cloud_.positions.data()), n * 3},
              {reinterpret_cast<const double*>(grads.positions.data()), n * 3}, positions_,
              rates_.position * scene_extent_, settings_);
    adam_step({reinterpret_cast<double*>(cloud_.rotations.data()), n * 4},
              {reinterpret_cast<const double*>(grads.rotations.data()), n * 4}, rotations_,
              rates_.rotation, settings_);
    adam_step({reinterpret_cast<double*>(cloud_.log_scales.data()), n * 3},
              {reinterpret_cast<const double*>(grads.log_scales.data()), n * 3}, log_scales_,
              rates_.log_scale, settings_);
    adam_step({reinterpret_cast<double*>(cloud_.colors.data()), n * 3},
              {reinterpret_cast<const double*>(grads.colors.data()), n * 3}, colors_,
              rates_.color, settings_);
    adam_step({cloud_.opacity_logits.data(), n}, {grads.opacity_logits.data(), n}, opacities_,
              rates_.opacity, settings_);

    for (auto& q : cloud_.rotations) q = q.normalized();
}

}  // namespace splatalign
