#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "splatalign/scene.hpp"

namespace splatalign {

enum class OracleKind { image, video, multiview };

const char* to_string(OracleKind kind);

// Condition passed alongside a denoising request: text for image/video
// oracles, an anchor frame for multiview oracles.
struct Condition {
    std::optional<std::string> text;
    std::optional<ImageBuffer> image;
    std::optional<double> guidance_scale;

    static Condition from_text(std::string t) {
        Condition c;
        c.text = std::move(t);
        return c;
    }
    static Condition from_image(ImageBuffer img) {
        Condition c;
        c.image = std::move(img);
        return c;
    }
};

// Noise-prediction service: maps (noisy image, condition, timestep) to the
// predicted noise of identical shape. Implementations must be deterministic
// for fixed inputs and safe to call from parallel workers.
class DenoiserOracle {
public:
    virtual ~DenoiserOracle() = default;
    virtual OracleKind kind() const = 0;
    virtual RgbField predict_noise(const RgbField& noisy, const Condition& condition,
                                   int tau) const = 0;
};

// Analytically perfect denoiser toward a fixed target:
// eps_hat(z, tau) = (z - alpha_tau * target) / sigma_tau.
class MockTargetOracle : public DenoiserOracle {
public:
    MockTargetOracle(RgbField target, const DiffusionSchedule& schedule,
                     OracleKind kind = OracleKind::image)
        : target_(std::move(target)), schedule_(&schedule), kind_(kind) {}

    OracleKind kind() const override { return kind_; }
    RgbField predict_noise(const RgbField& noisy, const Condition& condition,
                           int tau) const override;
    const RgbField& target() const { return target_; }

private:
    RgbField target_;
    const DiffusionSchedule* schedule_;
    OracleKind kind_;
};

// z = alpha_tau * x + sigma_tau * eps.
RgbField add_noise(const ImageBuffer& x, int tau, const RgbField& eps,
                   const DiffusionSchedule& schedule);

// w(tau) * (eps_hat(z, condition, tau) - eps), the per-pixel gradient fed
// into render_backward as upstream (the oracle is treated as a constant).
RgbField sds_gradient(const ImageBuffer& x, const DenoiserOracle& oracle,
                      const Condition& condition, int tau, const RgbField& eps,
                      const DiffusionSchedule& schedule);

// Shared-latent sum over oracles: one z, summed noise residuals.
RgbField combined_sds(const ImageBuffer& x,
                      const std::vector<std::pair<const DenoiserOracle*, Condition>>& oracles,
                      int tau, const RgbField& eps, const DiffusionSchedule& schedule);

struct RefineResult {
    double value = 0.0;
    std::vector<RgbField> grads;
};

// Temporal refinement: mean over frames of w(tau) * ||eps_hat - eps||^2 at
// one shared random view; gradients follow the SDS convention.
RefineResult time_refine_loss(const std::vector<ImageBuffer>& front_renders,
                              const DenoiserOracle& oracle, const Condition& text_condition,
                              int tau, const RgbField& eps, const DiffusionSchedule& schedule);

// Multiview refinement: mean over views at one timestep, conditioned on the
// matching anchor frame.
RefineResult mv_refine_loss(const std::vector<ImageBuffer>& view_renders,
                            const DenoiserOracle& oracle, const Condition& anchor_condition,
                            int tau, const RgbField& eps, const DiffusionSchedule& schedule);

struct RemoteOracleOptions {
    OracleKind kind = OracleKind::image;
    int timeout_seconds = 120;
    int max_in_flight = 4;
    int retries = 2;  // on transient failure; total attempts = retries + 1
};

// DenoiserOracle speaking the HTTP wire protocol (POST /v1/denoise) against
// `endpoint`, e.g. "http://127.0.0.1:8080". Throws oracle_unavailable_error
// on persistent failure or malformed payloads.
std::unique_ptr<DenoiserOracle> remote_oracle(const std::string& endpoint,
                                              const RemoteOracleOptions& options = {});

}  // namespace splatalign
