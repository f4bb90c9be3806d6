#pragma once

#include <array>

#include "tepinn/vec3.hpp"

namespace tepinn {

/// Orientation quaternion, Hamilton convention, scalar part first.
/// A unit quaternion rotates body-frame vectors into the world frame.
struct Quaternion {
    double w = 1.0;
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    static constexpr Quaternion identity() { return {1.0, 0.0, 0.0, 0.0}; }
    static constexpr Quaternion pure(Vec3 v) { return {0.0, v.x, v.y, v.z}; }

    constexpr Vec3 vec() const { return {x, y, z}; }
    constexpr std::array<double, 4> to_array() const { return {w, x, y, z}; }

    friend constexpr Quaternion operator-(Quaternion q) { return {-q.w, -q.x, -q.y, -q.z}; }
    friend constexpr Quaternion operator+(Quaternion a, Quaternion b) {
        return {a.w + b.w, a.x + b.x, a.y + b.y, a.z + b.z};
    }
    friend constexpr Quaternion operator-(Quaternion a, Quaternion b) {
        return {a.w - b.w, a.x - b.x, a.y - b.y, a.z - b.z};
    }
    friend constexpr Quaternion operator*(double s, Quaternion q) { return {s * q.w, s * q.x, s * q.y, s * q.z}; }
    friend constexpr bool operator==(const Quaternion&, const Quaternion&) = default;
};

/// Roll about x, pitch about y, yaw about z (intrinsic z-y'-x'' sequence).
struct EulerAngles {
    double roll = 0.0;
    double pitch = 0.0;
    double yaw = 0.0;
};

constexpr double dot(Quaternion a, Quaternion b) { return a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z; }
double norm(Quaternion q);
constexpr Quaternion conjugate(Quaternion q) { return {q.w, -q.x, -q.y, -q.z}; }

/// Hamilton product p ⊗ q. Not normalized.
Quaternion multiply(Quaternion p, Quaternion q);

/// Throws Error{ZeroNorm} when |q| < 1e-12.
Quaternion normalize(Quaternion q);

/// Arcsine argument for pitch is clamped to [-1, 1].
EulerAngles to_euler(Quaternion q);

/// Yaw-free Euler to quaternion conversion. Throws Error{NonZeroYaw} if |yaw| > 1e-12.
Quaternion from_euler(EulerAngles e);

/// q̇ = ½ q ⊗ [0, ω], ω in body frame.
Quaternion kinematics_derivative(Quaternion q, Vec3 omega);

/// Rotation angle between two orientations, in [0, π]; invariant to q → -q.
double geodesic_error(Quaternion q_est, Quaternion q_true);

/// Returns q or -q, whichever lies in the same hemisphere as `reference`.
Quaternion sign_align(Quaternion q, Quaternion reference);

/// Rotation by angle |rotvec| about rotvec's axis.
Quaternion from_rotation_vector(Vec3 rotvec);

/// Rotates v from body to world frame.
Vec3 rotate(Quaternion q, Vec3 v);

/// Rotation matrix (body to world) of a unit quaternion.
Mat3 to_rotation_matrix(Quaternion q);

/// Zeroes yaw while keeping roll and pitch: to_euler, drop yaw, from_euler.
Quaternion attitude_correct(Quaternion q);

bool is_finite(Quaternion q);

}  // namespace tepinn
