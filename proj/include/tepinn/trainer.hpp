#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tepinn/imu_sim.hpp"
#include "tepinn/losses.hpp"
#include "tepinn/transformer.hpp"

namespace tepinn {

struct TrainConfig {
    std::size_t epochs = 20;
    std::size_t batch_size = 16;
    double lr_network = 1e-3;
    double lr_physics = 1e-4;
    /// Multiplicative per-epoch decay of both learning rates.
    double lr_decay = 1.0;
    std::uint64_t seed = 0;
    /// Global gradient-norm threshold; 0 disables clipping.
    double grad_clip = 1.0;
    /// Step-level log cadence; 0 disables step logging.
    std::size_t log_every = 50;
    /// Fraction of total steps over which the physics weights ramp up linearly.
    double physics_warmup = 0.1;
    /// Number of trailing window positions that enter the physics residuals.
    std::size_t physics_span = 3;
    /// Keep trace(I) fixed; the scale of I is unobservable without torque data.
    bool fix_inertia_scale = true;

    void validate() const;
    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Encoder weights plus the trainable physical parameters.
struct ModelParams {
    EncoderParams encoder;
    /// "calib.gyro_bias" [3], "calib.accel_bias" [3], "calib.gyro_scale" [3×3],
    /// "calib.accel_scale" [3×3], "inertia.lower" [3×3].
    std::vector<ad::Parameter> physics;

    ModelParams() = default;
    ModelParams(const EncoderConfig& config, std::uint64_t seed);

    ad::Parameter& physics_param(const std::string& name);
    const ad::Parameter& physics_param(const std::string& name) const;
    SensorCalibration calibration() const;
    InertiaFactor inertia() const;

    /// Network parameters first, then physics parameters.
    std::vector<ad::Parameter*> all();
    std::vector<const ad::Parameter*> all() const;
};

inline constexpr const char* kGyroBias = "calib.gyro_bias";
inline constexpr const char* kAccelBias = "calib.accel_bias";
inline constexpr const char* kGyroScale = "calib.gyro_scale";
inline constexpr const char* kAccelScale = "calib.accel_scale";
inline constexpr const char* kInertiaLower = "inertia.lower";

/// Spectral radius at which scale matrices are shrunk back.
inline constexpr double kScaleRadiusLimit = 0.5;
inline constexpr double kMinInertiaDiagonal = 1e-6;

/// Clamps the inertia diagonal, zeroes its upper triangle and rescales S_g / S_a
/// whose spectral radius reaches 0.5. Idempotent.
void project_constraints(ModelParams& model);

/// A window of `window_len` consecutive samples ending at `start + window_len - 1`.
struct WindowRef {
    std::size_t trajectory = 0;
    std::size_t start = 0;
};

/// Windows with stride max(1, N/2). Throws EmptyDataset if none fit.
std::vector<WindowRef> extract_windows(std::span<const Trajectory> data, std::size_t window_len);

struct EpochLog {
    std::size_t epoch = 0;
    LossBreakdown mean;
    double wall_seconds = 0.0;
};

struct StepLog {
    std::size_t step = 0;
    LossBreakdown loss;
};

/// Adam moments, one pair per parameter in ModelParams::all() order.
struct OptimizerState {
    std::vector<ad::Tensor> m, v;
    std::size_t step = 0;
};

/// Records the training objective of one minibatch on `tape` and returns the
/// differentiated total. `nominal` receives the breakdown with unscaled weights.
ad::Var minibatch_objective(ad::Tape& tape, ModelParams& model, std::span<const Trajectory> data,
                            std::span<const WindowRef> batch, const TrainConfig& cfg, const LossWeights& weights,
                            double physics_scale, std::uint64_t dropout_seed, LossBreakdown* nominal = nullptr);

/// Evaluates the training objective of one minibatch on a fresh tape.
/// Returns nominal-weight breakdown; gradients accumulate into the params.
/// `physics_scale` multiplies the physics weights in the differentiated loss.
LossBreakdown minibatch_loss(ModelParams& model, std::span<const Trajectory> data, std::span<const WindowRef> batch,
                             const TrainConfig& cfg, const LossWeights& weights, double physics_scale,
                             bool backward, std::uint64_t dropout_seed);

/// Step-granular training loop with resumable state.
class Trainer {
public:
    Trainer(ModelParams& model, std::span<const Trajectory> data, TrainConfig cfg, LossWeights weights);

    /// Adopts optimizer state and progress from a checkpoint.
    void restore(OptimizerState state, std::size_t epoch, std::size_t step_in_epoch);

    std::size_t steps_per_epoch() const;
    std::size_t total_steps() const { return steps_per_epoch() * cfg_.epochs; }
    std::size_t epoch() const { return epoch_; }
    std::size_t step_in_epoch() const { return step_in_epoch_; }
    bool done() const { return epoch_ >= cfg_.epochs; }
    const OptimizerState& optimizer() const { return opt_; }
    const TrainConfig& config() const { return cfg_; }
    const LossWeights& weights() const { return weights_; }

    /// One optimizer step. Throws NanLoss after restoring the pre-step params.
    LossBreakdown step();
    /// Runs the rest of the current epoch and returns its mean breakdown.
    EpochLog run_epoch();
    /// Runs to completion.
    std::vector<EpochLog> run(const std::function<void(const EpochLog&)>& on_epoch = {});

    const std::vector<StepLog>& step_log() const { return step_log_; }

private:
    std::vector<std::size_t> epoch_order(std::size_t epoch) const;

    ModelParams& model_;
    std::span<const Trajectory> data_;
    TrainConfig cfg_;
    LossWeights weights_;
    std::vector<WindowRef> windows_;
    OptimizerState opt_;
    std::size_t epoch_ = 0;
    std::size_t step_in_epoch_ = 0;
    LossBreakdown epoch_sum_;
    std::size_t epoch_count_ = 0;
    std::vector<StepLog> step_log_;
};

/// Clips gradients to a global L2 norm; returns the norm before clipping.
double clip_global_norm(std::span<ad::Parameter* const> params, double max_norm);

/// Physics-weight multiplier at a given step: linear ramp over the warm-up.
double physics_warmup_scale(std::size_t step, std::size_t total_steps, double warmup_fraction);

}  // namespace tepinn
