#include "splatalign/guidance.hpp"

#include <cmath>

#include "splatalign/errors.hpp"

namespace splatalign {

const char* to_string(OracleKind kind) {
    switch (kind) {
        case OracleKind::image: return "image";
        case OracleKind::video: return "video";
        case OracleKind::multiview: return "multiview";
    }
    return "unknown";
}

RgbField MockTargetOracle::predict_noise(const RgbField& noisy, const Condition&,
                                         int tau) const {
    if (!schedule_->valid_tau(tau))
        throw invalid_parameter_error("MockTargetOracle: tau outside schedule");
    if (noisy.width != target_.width || noisy.height != target_.height)
        throw invalid_parameter_error("MockTargetOracle: shape mismatch with target");
    const double alpha = schedule_->alpha[tau];
    const double inv_sigma = 1.0 / schedule_->sigma[tau];
    RgbField out(noisy.width, noisy.height);
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = (noisy.data[i] - alpha * target_.data[i]) * inv_sigma;
    return out;
}

RgbField add_noise(const ImageBuffer& x, int tau, const RgbField& eps,
                   const DiffusionSchedule& schedule) {
    if (!schedule.valid_tau(tau)) throw invalid_parameter_error("add_noise: tau outside [1, T_max]");
    if (eps.width != x.width || eps.height != x.height)
        throw invalid_parameter_error("add_noise: noise shape mismatch");
    const double alpha = schedule.alpha[tau], sigma = schedule.sigma[tau];
    RgbField z(x.width, x.height);
    for (std::size_t i = 0; i < z.data.size(); ++i)
        z.data[i] = alpha * x.rgb[i] + sigma * eps.data[i];
    return z;
}

RgbField sds_gradient(const ImageBuffer& x, const DenoiserOracle& oracle,
                      const Condition& condition, int tau, const RgbField& eps,
                      const DiffusionSchedule& schedule) {
    RgbField z = add_noise(x, tau, eps, schedule);
    RgbField eps_hat = oracle.predict_noise(z, condition, tau);
    if (eps_hat.width != x.width || eps_hat.height != x.height)
        throw oracle_unavailable_error(std::string("sds_gradient: ") + to_string(oracle.kind()) +
                                       " oracle returned a mismatched shape");
    const double w = schedule.weight[tau];
    RgbField grad(x.width, x.height);
    for (std::size_t i = 0; i < grad.data.size(); ++i)
        grad.data[i] = w * (eps_hat.data[i] - eps.data[i]);
    return grad;
}

RgbField combined_sds(const ImageBuffer& x,
                      const std::vector<std::pair<const DenoiserOracle*, Condition>>& oracles,
                      int tau, const RgbField& eps, const DiffusionSchedule& schedule) {
    if (oracles.empty()) throw invalid_parameter_error("combined_sds: no oracles");
    RgbField z = add_noise(x, tau, eps, schedule);
    const double w = schedule.weight[tau];
    RgbField grad(x.width, x.height);
    for (const auto& [oracle, condition] : oracles) {
        RgbField eps_hat = oracle->predict_noise(z, condition, tau);
        if (eps_hat.width != x.width || eps_hat.height != x.height)
            throw oracle_unavailable_error(std::string("combined_sds: ") +
                                           to_string(oracle->kind()) +
                                           " oracle returned a mismatched shape");
        for (std::size_t i = 0; i < grad.data.size(); ++i)
            grad.data[i] += w * (eps_hat.data[i] - eps.data[i]);
    }
    return grad;
}

namespace {

RefineResult refine_loss(const std::vector<ImageBuffer>& renders, const DenoiserOracle& oracle,
                         const Condition& condition, int tau, const RgbField& eps,
                         const DiffusionSchedule& schedule, OracleKind expected,
                         const char* op) {
    if (oracle.kind() != expected)
        throw invalid_parameter_error(std::string(op) + ": oracle kind must be " +
                                      to_string(expected) + ", got " +
                                      to_string(oracle.kind()));
    if (renders.empty()) throw invalid_parameter_error(std::string(op) + ": no renders");

    RefineResult result;
    const double w = schedule.weight[tau];
    const double inv_n = 1.0 / double(renders.size());
    for (const auto& x : renders) {
        RgbField residual = sds_gradient(x, oracle, condition, tau, eps, schedule);
        // residual = w * (eps_hat - eps); the scalar is w * ||eps_hat - eps||^2.
        double sq = 0.0;
        for (double v : residual.data) sq += v * v;
        result.value += inv_n * (w > 0.0 ? sq / w : 0.0);
        residual *= inv_n;
        result.grads.push_back(std::move(residual));
    }
    return result;
}

}  // namespace

RefineResult time_refine_loss(const std::vector<ImageBuffer>& front_renders,
                              const DenoiserOracle& oracle, const Condition& text_condition,
                              int tau, const RgbField& eps, const DiffusionSchedule& schedule) {
    return refine_loss(front_renders, oracle, text_condition, tau, eps, schedule,
                       OracleKind::video, "time_refine_loss");
}

RefineResult mv_refine_loss(const std::vector<ImageBuffer>& view_renders,
                            const DenoiserOracle& oracle, const Condition& anchor_condition,
                            int tau, const RgbField& eps, const DiffusionSchedule& schedule) {
    return refine_loss(view_renders, oracle, anchor_condition, tau, eps, schedule,
                       OracleKind::multiview, "mv_refine_loss");
}

}  // namespace splatalign
