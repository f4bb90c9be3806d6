#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "tepinn/autodiff/ops.hpp"
#include "tepinn/imu_sim.hpp"
#include "tepinn/quat.hpp"

namespace tepinn {

struct EncoderConfig {
    std::size_t d_model = 32;
    std::size_t n_layers = 2;
    std::size_t n_heads = 4;
    std::size_t d_ff = 64;
    std::size_t window_len = 32;
    double dropout_rate = 0.0;
    /// Apply the yaw-zeroing correction after the quaternion head.
    bool attitude_correction = true;

    /// Throws InvalidArgument / OddModelDim.
    void validate() const;
    friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

/// All encoder weights as named parameters, in a fixed registration order.
class EncoderParams {
public:
    EncoderParams() = default;
    /// Xavier-uniform weights, zero biases, unit layer-norm gains; the head
    /// bias starts at the identity quaternion.
    EncoderParams(const EncoderConfig& config, std::uint64_t seed);

    EncoderParams(const EncoderParams& other);
    EncoderParams& operator=(const EncoderParams& other);
    EncoderParams(EncoderParams&&) noexcept = default;
    EncoderParams& operator=(EncoderParams&&) noexcept = default;

    const EncoderConfig& config() const { return config_; }
    ad::Parameter& at(const std::string& name);
    const ad::Parameter& at(const std::string& name) const;
    std::vector<ad::Parameter>& list() { return params_; }
    const std::vector<ad::Parameter>& list() const { return params_; }
    std::vector<ad::Parameter*> pointers();

private:
    void add(const std::string& name, ad::Tensor value);
    void reindex();

    EncoderConfig config_;
    std::vector<ad::Parameter> params_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Encoder parameters bound to one tape, reused by every window on it.
struct BoundEncoder {
    struct Layer {
        ad::Var wq, bq, wk, bk, wv, bv, wo, bo;
        ad::Var ln1_gain, ln1_bias;
        ad::Var ff_w1, ff_b1, ff_w2, ff_b2;
        ad::Var ln2_gain, ln2_bias;
    };
    EncoderConfig config;
    ad::Var input_w, input_b;
    std::vector<Layer> layers;
    ad::Var head_w, head_b;
};

BoundEncoder bind(ad::Tape& tape, EncoderParams& params);
/// Binds weights as constants (no gradients); safe for concurrent inference.
BoundEncoder bind_frozen(ad::Tape& tape, const EncoderParams& params);

struct ForwardOptions {
    /// Enables dropout when the configured rate is positive.
    bool training = false;
    std::mt19937_64* dropout_rng = nullptr;
    /// When set, receives each layer/head attention matrix (N×N).
    std::vector<ad::Tensor>* attention_out = nullptr;
};

/// N×6 matrix with rows [ωx, ωy, ωz, ax, ay, az]. Throws WrongWindowLength.
ad::Tensor build_input(std::span<const ImuSample> window, std::size_t window_len);

/// Timestamps relative to the first sample of the window, seconds.
std::vector<double> window_timestamps(std::span<const ImuSample> window);

/// Sinusoidal encoding of real timestamps. Throws OddModelDim.
ad::Tensor positional_encoding(std::span<const double> timestamps, std::size_t d_model);

/// Linear projection plus positional encoding, then post-norm encoder layers.
ad::Var encoder_forward(ad::Tape& tape, const BoundEncoder& enc, const ad::Tensor& x,
                        std::span<const double> timestamps, const ForwardOptions& options = {});

/// Linear head on the last `count` hidden rows followed by row normalization
/// (count × 4). No attitude correction.
ad::Var quaternion_head_rows(const BoundEncoder& enc, ad::Var hidden, std::size_t count);

/// Head applied to the last hidden row; returns the unit quaternion.
Quaternion quaternion_head(ad::Tape& tape, const BoundEncoder& enc, ad::Var hidden);

/// Yaw-zeroing correction, equivalent to tepinn::attitude_correct.
Quaternion attitude_correct_layer(Quaternion q);

/// Full inference path: input → encoder → head → correction (if enabled).
Quaternion estimate(std::span<const ImuSample> window, const EncoderParams& params);

}  // namespace tepinn
