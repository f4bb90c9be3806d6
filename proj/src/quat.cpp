#include "tepinn/quat.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tepinn/error.hpp"

namespace tepinn {

double norm(Quaternion q) { return std::sqrt(dot(q, q)); }

Quaternion multiply(Quaternion p, Quaternion q) {
    return {p.w * q.w - p.x * q.x - p.y * q.y - p.z * q.z,
            p.w * q.x + p.x * q.w + p.y * q.z - p.z * q.y,
            p.w * q.y - p.x * q.z + p.y * q.w + p.z * q.x,
            p.w * q.z + p.x * q.y - p.y * q.x + p.z * q.w};
}

Quaternion normalize(Quaternion q) {
    const double n = norm(q);
    if (!(n >= 1e-12)) {
        std::ostringstream os;
        os << "cannot normalize quaternion with norm " << n;
        throw Error(ErrorKind::ZeroNorm, os.str());
    }
    return (1.0 / n) * q;
}

EulerAngles to_euler(Quaternion q) {
    EulerAngles e;
    e.roll = std::atan2(2.0 * (q.w * q.x + q.y * q.z), 1.0 - 2.0 * (q.x * q.x + q.y * q.y));
    const double s = std::clamp(2.0 * (q.w * q.y - q.z * q.x), -1.0, 1.0);
    e.pitch = std::asin(s);
    e.yaw = std::atan2(2.0 * (q.w * q.z + q.x * q.y), 1.0 - 2.0 * (q.y * q.y + q.z * q.z));
    return e;
}

Quaternion from_euler(EulerAngles e) {
    if (std::abs(e.yaw) > 1e-12) {
        std::ostringstream os;
        os << "yaw must be zero, got " << e.yaw;
        throw Error(ErrorKind::NonZeroYaw, os.str());
    }
    const double cr = std::cos(0.5 * e.roll), sr = std::sin(0.5 * e.roll);
    const double cp = std::cos(0.5 * e.pitch), sp = std::sin(0.5 * e.pitch);
    // z-y-x composition with zero yaw: q = q_y(pitch) ⊗ q_x(roll)
    return {cr * cp, sr * cp, cr * sp, -sr * sp};
}

Quaternion kinematics_derivative(Quaternion q, Vec3 omega) {
    return 0.5 * multiply(q, Quaternion::pure(omega));
}

double geodesic_error(Quaternion q_est, Quaternion q_true) {
    const double c = std::min(1.0, std::abs(dot(q_est, q_true)));
    return 2.0 * std::acos(c);
}

Quaternion sign_align(Quaternion q, Quaternion reference) { return dot(q, reference) < 0.0 ? -q : q; }

Quaternion from_rotation_vector(Vec3 rotvec) {
    const double angle = norm(rotvec);
    if (angle < 1e-12) {
        // second-order series keeps small rotations accurate
        return normalize({1.0 - angle * angle / 8.0, 0.5 * rotvec.x, 0.5 * rotvec.y, 0.5 * rotvec.z});
    }
    const double s = std::sin(0.5 * angle) / angle;
    return {std::cos(0.5 * angle), s * rotvec.x, s * rotvec.y, s * rotvec.z};
}

Mat3 to_rotation_matrix(Quaternion q) {
    const double ww = q.w * q.w, xx = q.x * q.x, yy = q.y * q.y, zz = q.z * q.z;
    const double xy = q.x * q.y, xz = q.x * q.z, yz = q.y * q.z;
    const double wx = q.w * q.x, wy = q.w * q.y, wz = q.w * q.z;
    return {{ww + xx - yy - zz, 2.0 * (xy - wz), 2.0 * (xz + wy),
             2.0 * (xy + wz), ww - xx + yy - zz, 2.0 * (yz - wx),
             2.0 * (xz - wy), 2.0 * (yz + wx), ww - xx - yy + zz}};
}

Vec3 rotate(Quaternion q, Vec3 v) {
    const Quaternion r = multiply(multiply(q, Quaternion::pure(v)), conjugate(q));
    return r.vec();
}

Quaternion attitude_correct(Quaternion q) {
    EulerAngles e = to_euler(q);
    e.yaw = 0.0;
    return from_euler(e);
}

bool is_finite(Quaternion q) {
    return std::isfinite(q.w) && std::isfinite(q.x) && std::isfinite(q.y) && std::isfinite(q.z);
}

}  // namespace tepinn
