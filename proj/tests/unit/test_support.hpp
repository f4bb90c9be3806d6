#pragma once

#include <cmath>
#include <numbers>
#include <random>

#include "tepinn/quat.hpp"

namespace tepinn::test {

inline Quaternion random_unit_quaternion(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    return normalize({n(rng), n(rng), n(rng), n(rng)});
}

inline Vec3 random_vec(std::mt19937_64& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    return {u(rng), u(rng), u(rng)};
}

// Euler angles from a rotation matrix, z-y-x convention, computed without
// touching the quaternion formulas.
inline EulerAngles euler_from_matrix(const Mat3& r) {
    return {std::atan2(r(2, 1), r(2, 2)), -std::asin(std::clamp(r(2, 0), -1.0, 1.0)), std::atan2(r(1, 0), r(0, 0))};
}

inline Mat3 matrix_from_euler(const EulerAngles& e) {
    const double cr = std::cos(e.roll), sr = std::sin(e.roll);
    const double cp = std::cos(e.pitch), sp = std::sin(e.pitch);
    const double cy = std::cos(e.yaw), sy = std::sin(e.yaw);
    const Mat3 rz{{cy, -sy, 0, sy, cy, 0, 0, 0, 1}};
    const Mat3 ry{{cp, 0, sp, 0, 1, 0, -sp, 0, cp}};
    const Mat3 rx{{1, 0, 0, 0, cr, -sr, 0, sr, cr}};
    return rz * ry * rx;
}

inline double angle_diff(double a, double b) { return std::remainder(a - b, 2.0 * std::numbers::pi); }

}  // namespace tepinn::test
