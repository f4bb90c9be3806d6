#pragma once

#include <functional>

#include "tepinn/quat.hpp"
#include "tepinn/vec3.hpp"

namespace tepinn {

/// Inertia tensor stored as its lower-triangular Cholesky factor, I = L·Lᵀ.
/// Entries above the diagonal are ignored.
struct InertiaFactor {
    Mat3 lower = Mat3::identity();

    static InertiaFactor from_diagonal(double ixx, double iyy, double izz);
    /// Factorizes a symmetric positive definite tensor. Throws SingularInertia otherwise.
    static InertiaFactor from_tensor(const Mat3& inertia);

    Mat3 tensor() const;
    Vec3 apply(Vec3 v) const;
    /// Solves I·x = rhs via the two triangular factors. Throws SingularInertia.
    Vec3 solve(Vec3 rhs) const;
};

/// Sensor error model: raw = true + S·true + b (to first order). The
/// correction below subtracts b and S·raw, matching the estimator's model.
struct SensorCalibration {
    Vec3 gyro_bias{};
    Vec3 accel_bias{};
    Mat3 gyro_scale = Mat3::zero();
    Mat3 accel_scale = Mat3::zero();

    SensorCalibration() = default;
    /// Throws InvalidArgument if either scale matrix has spectral radius >= 1.
    SensorCalibration(Vec3 b_g, Vec3 b_a, const Mat3& s_g, const Mat3& s_a);
};

/// Largest eigenvalue magnitude of a general 3x3 matrix.
double spectral_radius(const Mat3& m);

struct BodyState {
    Quaternion q = Quaternion::identity();
    Vec3 omega{};
};

/// Torque as a function of (time, state), N·m.
using TorqueFn = std::function<Vec3(double, const BodyState&)>;

/// Euler's rotational equation solved for ω̇.
Vec3 angular_acceleration(const InertiaFactor& inertia, Vec3 omega, Vec3 tau);

/// Classic RK4 on the coupled (q, ω) system with constant torque; q renormalized.
BodyState rk4_step(const BodyState& state, const InertiaFactor& inertia, Vec3 tau, double dt);

/// RK4 with torque evaluated at each stage. `t` is the start time of the step.
BodyState rk4_step(const BodyState& state, const InertiaFactor& inertia, const TorqueFn& torque, double t,
                   double dt);

Vec3 correct_gyro(Vec3 raw, const SensorCalibration& cal);
Vec3 correct_accel(Vec3 raw, const SensorCalibration& cal);

/// World gravity (0, 0, -g) expressed in the body frame.
Vec3 gravity_in_body(Quaternion q, double g);

inline constexpr double kGravity = 9.81;

}  // namespace tepinn
