#pragma once

#include <span>
#include <vector>

#include "tepinn/autodiff/ops.hpp"
#include "tepinn/dynamics.hpp"
#include "tepinn/quat.hpp"

namespace tepinn {

struct LossWeights {
    double acc = 0.1;
    double gyro = 0.1;
    double dynamics = 0.01;
    double weight_decay = 1e-4;

    void validate() const;
    friend bool operator==(const LossWeights&, const LossWeights&) = default;
};

struct LossBreakdown {
    double data = 0.0;
    double acc = 0.0;
    double gyro = 0.0;
    double dynamics = 0.0;
    double weight_decay = 0.0;
    double total = 0.0;
};

/// Sensor calibration and inertia factor as tape variables.
/// Biases are 1×3, scale matrices and the inertia factor 3×3.
struct PhysicsVars {
    ad::Var gyro_bias, accel_bias;
    ad::Var gyro_scale, accel_scale;
    ad::Var inertia_lower;
};

PhysicsVars constant_physics(ad::Tape& tape, const SensorCalibration& cal, const InertiaFactor& inertia);

/// Row-wise raw − b − S·raw.
ad::Var correct_gyro_rows(ad::Var raw, const PhysicsVars& phys);
ad::Var correct_accel_rows(ad::Var raw, const PhysicsVars& phys);

/// L·Lᵀ with the strictly upper part of L masked out.
ad::Var inertia_tensor(ad::Var lower);

/// Mean over all components of (q_pred − align(q_true))². Truth rows are
/// sign-aligned to the prediction rows. Throws LengthMismatch.
ad::Var data_loss(ad::Var q_pred, std::span<const Quaternion> q_true);

/// Mean over samples of |gravity_in_body(q) − correct_accel(a)|², (m/s²)².
ad::Var acc_loss(ad::Var q_pred, ad::Var accel_measured, const PhysicsVars& phys);

/// Mean over interior samples of |ω_implied − correct_gyro(ω_meas)|² where
/// ω_implied(i) = 2·vec(conj(q_i) ⊗ (q_{i+1} − q_{i−1}) / 2dt). Throws TooShort.
ad::Var gyro_loss(ad::Var q_pred, ad::Var gyro_measured, const PhysicsVars& phys, double dt);

/// Mean over interior samples of |I·ω̇_fd + ω × (I·ω) − τ|², (N·m)².
/// ω̇ by central differences. Throws TooShort.
ad::Var dynamics_loss(ad::Var omega, ad::Var inertia_lower, Vec3 tau, double dt);

struct LossTerms {
    ad::Var data, acc, gyro, dynamics;
    /// Sum of squared entries of the regularized parameters.
    ad::Var weight_decay;
};

/// λ_acc·acc + λ_gyro·gyro + λ_dyn·dynamics.
ad::Var physics_loss(const LossTerms& terms, const LossWeights& w);

/// data + physics + λ_wd·weight_decay, plus the per-term values.
ad::Var total_loss(const LossTerms& terms, const LossWeights& w, LossBreakdown* breakdown = nullptr);

/// Σ over tensors of Σ entries².
ad::Var sum_of_squares(std::span<const ad::Var> params);

}  // namespace tepinn
