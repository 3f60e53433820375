#pragma once

#include <span>
#include <vector>

#include "splatalign/scene.hpp"

namespace splatalign {

struct AdamSettings {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// Bias-corrected adaptive-moment state for one parameter group.
struct OptimizerState {
    std::vector<double> m;
    std::vector<double> v;
    long step = 0;

    explicit OptimizerState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

// One Adam update over a flat parameter span. Throws numeric_overflow_error
// on non-finite gradients.
void adam_step(std::span<double> params, std::span<const double> grads, OptimizerState& state,
               double rate, const AdamSettings& settings = {});

// View of a GaussianCloud as named flat parameter groups; quaternions are
// renormalized after every update so the cloud invariants survive
// unconstrained steps.
class CloudOptimizer {
public:
    struct Rates {
        double position = 1.6e-4;  // scaled by the scene extent
        double rotation = 1e-3;
        double log_scale = 5e-3;
        double color = 2.5e-3;
        double opacity = 5e-2;
    };

    CloudOptimizer(GaussianCloud& cloud, const Rates& rates, double scene_extent,
                   const AdamSettings& settings = {});

    void step(const struct RenderGrads& grads);
    long steps_taken() const { return positions_.step; }

private:
    GaussianCloud& cloud_;
    Rates rates_;
    double scene_extent_;
    AdamSettings settings_;
    OptimizerState positions_, rotations_, log_scales_, colors_, opacities_;
};

}  // namespace splatalign
