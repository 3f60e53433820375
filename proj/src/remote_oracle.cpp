#include <condition_variable>
#include <cstring>
#include <mutex>

#include "splatalign/errors.hpp"
#include "splatalign/guidance.hpp"
#include "splatalign/image_io.hpp"

#include <httplib.h>
#include <json.hpp>

namespace splatalign {

namespace {

using nlohmann::json;

std::string pack_f32_le(const RgbField& field) {
    std::vector<unsigned char> bytes;
    bytes.reserve(field.data.size() * 4);
    for (double v : field.data) {
        float f = float(v);
        uint32_t bits;
        std::memcpy(&bits, &f, 4);
        bytes.push_back(bits & 0xff);
        bytes.push_back((bits >> 8) & 0xff);
        bytes.push_back((bits >> 16) & 0xff);
        bytes.push_back((bits >> 24) & 0xff);
    }
    return base64_encode(bytes.data(), bytes.size());
}

RgbField unpack_f32_le(const std::string& b64, int width, int height, const std::string& where) {
    std::vector<unsigned char> bytes = base64_decode(b64);
    const std::size_t expected = std::size_t(width) * height * 3 * 4;
    if (bytes.size() != expected)
        throw oracle_unavailable_error("remote oracle: eps_hat shape mismatch in " + where);
    RgbField out(width, height);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        uint32_t bits = uint32_t(bytes[4 * i]) | (uint32_t(bytes[4 * i + 1]) << 8) |
                        (uint32_t(bytes[4 * i + 2]) << 16) | (uint32_t(bytes[4 * i + 3]) << 24);
        float f;
        std::memcpy(&f, &bits, 4);
        out.data[i] = f;
    }
    return out;
}

// Simple counting gate bounding concurrent wire calls.
class InFlightGate {
public:
    explicit InFlightGate(int limit) : limit_(limit) {}
    void acquire() {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [&] { return active_ < limit_; });
        ++active_;
    }
    void release() {
        std::lock_guard lock(mutex_);
        --active_;
        cv_.notify_one();
    }

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    int limit_;
    int active_ = 0;
};

class RemoteOracle : public DenoiserOracle {
public:
    RemoteOracle(std::string endpoint, const RemoteOracleOptions& options)
        : endpoint_(std::move(endpoint)), options_(options), gate_(options.max_in_flight) {}

    OracleKind kind() const override { return options_.kind; }

    RgbField predict_noise(const RgbField& noisy, const Condition& condition,
                           int tau) const override {
        json body;
        body["kind"] = to_string(options_.kind);
        body["tau"] = tau;
        body["condition_text"] = condition.text ? json(*condition.text) : json(nullptr);
        if (condition.image) {
            auto png = encode_png(*condition.image, true);
            body["condition_image"] = base64_encode(png.data(), png.size());
        } else {
            body["condition_image"] = nullptr;
        }
        body["images"] = json::array({pack_f32_le(noisy)});
        body["height"] = noisy.height;
        body["width"] = noisy.width;
        body["guidance_scale"] =
            condition.guidance_scale ? json(*condition.guidance_scale) : json(nullptr);
        const std::string payload = body.dump();

        gate_.acquire();
        struct Release {
            InFlightGate& g;
            ~Release() { g.release(); }
        } release{gate_};

        std::string last_failure = "no attempt made";
        for (int attempt = 0; attempt <= options_.retries; ++attempt) {
            httplib::Client client(endpoint_);
            client.set_connection_timeout(options_.timeout_seconds, 0);
            client.set_read_timeout(options_.timeout_seconds, 0);
            client.set_write_timeout(options_.timeout_seconds, 0);
            auto res = client.Post("/v1/denoise", payload, "application/json");
            if (!res) {
                last_failure = "transport error (" + httplib::to_string(res.error()) + ")";
                continue;
            }
            if (res->status != 200) {
                last_failure = "status " + std::to_string(res->status);
                if (res->status >= 500) continue;   // transient; retry
                break;                              // 4xx will not improve
            }
            try {
                json reply = json::parse(res->body);
                const auto& eps = reply.at("eps_hat");
                if (!eps.is_array() || eps.size() != 1)
                    throw oracle_unavailable_error(
                        "remote oracle: eps_hat shape mismatch (expected 1 image) from " +
                        endpoint_);
                return unpack_f32_le(eps[0].get<std::string>(), noisy.width, noisy.height,
                                     endpoint_);
            } catch (const json::exception& e) {
                throw oracle_unavailable_error("remote oracle: malformed payload from " +
                                               endpoint_ + ": " + e.what());
            }
        }
        throw oracle_unavailable_error("remote oracle: " + std::string(to_string(options_.kind)) +
                                       " endpoint " + endpoint_ + " unavailable: " + last_failure);
    }

private:
    std::string endpoint_;
    RemoteOracleOptions options_;
    mutable InFlightGate gate_;
};

}  // namespace

std::unique_ptr<DenoiserOracle> remote_oracle(const std::string& endpoint,
                                              const RemoteOracleOptions& options) {
    if (endpoint.empty()) throw invalid_parameter_error("remote_oracle: empty endpoint");
    return std::make_unique<RemoteOracle>(endpoint, options);
}

}  // namespace splatalign
