#include "tepinn/dynamics.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <sstream>

#include "tepinn/error.hpp"

namespace tepinn {

namespace {

constexpr double kMinDiagonal = 1e-9;

void check_diagonal(const Mat3& lower) {
    for (int i = 0; i < 3; ++i) {
        if (!(lower(i, i) >= kMinDiagonal)) {
            std::ostringstream os;
            os << "inertia factor diagonal entry " << i << " is " << lower(i, i);
            throw Error(ErrorKind::SingularInertia, os.str());
        }
    }
}

struct Derivative {
    Quaternion dq;
    Vec3 domega;
};

Derivative evaluate(const BodyState& s, const InertiaFactor& inertia, Vec3 tau) {
    return {kinematics_derivative(s.q, s.omega), angular_acceleration(inertia, s.omega, tau)};
}

BodyState advance(const BodyState& s, const Derivative& d, double h) {
    return {s.q + h * d.dq, s.omega + h * d.domega};
}

}  // namespace

InertiaFactor InertiaFactor::from_diagonal(double ixx, double iyy, double izz) {
    if (!(ixx > 0.0 && iyy > 0.0 && izz > 0.0)) {
        throw Error(ErrorKind::SingularInertia, "principal moments must be positive");
    }
    return {Mat3::diag(std::sqrt(ixx), std::sqrt(iyy), std::sqrt(izz))};
}

InertiaFactor InertiaFactor::from_tensor(const Mat3& inertia) {
    Eigen::Matrix3d a;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) a(r, c) = inertia(r, c);
    Eigen::LLT<Eigen::Matrix3d> llt(a);
    if (llt.info() != Eigen::Success) {
        throw Error(ErrorKind::SingularInertia, "inertia tensor is not positive definite");
    }
    const Eigen::Matrix3d l = llt.matrixL();
    InertiaFactor out;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) out.lower(r, c) = c <= r ? l(r, c) : 0.0;
    return out;
}

Mat3 InertiaFactor::tensor() const {
    Mat3 l = lower;
    l(0, 1) = l(0, 2) = l(1, 2) = 0.0;
    return l * transpose(l);
}

Vec3 InertiaFactor::apply(Vec3 v) const {
    // Lᵀv then L(...)
    const Vec3 u{lower(0, 0) * v.x + lower(1, 0) * v.y + lower(2, 0) * v.z,
                 lower(1, 1) * v.y + lower(2, 1) * v.z,
                 lower(2, 2) * v.z};
    return {lower(0, 0) * u.x,
            lower(1, 0) * u.x + lower(1, 1) * u.y,
            lower(2, 0) * u.x + lower(2, 1) * u.y + lower(2, 2) * u.z};
}

Vec3 InertiaFactor::solve(Vec3 rhs) const {
    check_diagonal(lower);
    // forward: L y = rhs
    Vec3 y;
    y.x = rhs.x / lower(0, 0);
    y.y = (rhs.y - lower(1, 0) * y.x) / lower(1, 1);
    y.z = (rhs.z - lower(2, 0) * y.x - lower(2, 1) * y.y) / lower(2, 2);
    // backward: Lᵀ x = y
    Vec3 x;
    x.z = y.z / lower(2, 2);
    x.y = (y.y - lower(2, 1) * x.z) / lower(1, 1);
    x.x = (y.x - lower(1, 0) * x.y - lower(2, 0) * x.z) / lower(0, 0);
    return x;
}

double spectral_radius(const Mat3& m) {
    Eigen::Matrix3d a;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) a(r, c) = m(r, c);
    const Eigen::EigenSolver<Eigen::Matrix3d> solver(a, false);
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

SensorCalibration::SensorCalibration(Vec3 b_g, Vec3 b_a, const Mat3& s_g, const Mat3& s_a)
    : gyro_bias(b_g), accel_bias(b_a), gyro_scale(s_g), accel_scale(s_a) {
    if (!(spectral_radius(s_g) < 1.0) || !(spectral_radius(s_a) < 1.0)) {
        throw Error(ErrorKind::InvalidArgument, "scale-factor matrices must have spectral radius < 1");
    }
}

Vec3 angular_acceleration(const InertiaFactor& inertia, Vec3 omega, Vec3 tau) {
    return inertia.solve(tau - cross(omega, inertia.apply(omega)));
}

BodyState rk4_step(const BodyState& state, const InertiaFactor& inertia, Vec3 tau, double dt) {
    return rk4_step(state, inertia, [tau](double, const BodyState&) { return tau; }, 0.0, dt);
}

BodyState rk4_step(const BodyState& state, const InertiaFactor& inertia, const TorqueFn& torque, double t,
                   double dt) {
    if (!(dt > 0.0)) throw Error(ErrorKind::InvalidArgument, "dt must be positive");
    const double half = 0.5 * dt;
    const Derivative k1 = evaluate(state, inertia, torque(t, state));
    const BodyState s2 = advance(state, k1, half);
    const Derivative k2 = evaluate(s2, inertia, torque(t + half, s2));
    const BodyState s3 = advance(state, k2, half);
    const Derivative k3 = evaluate(s3, inertia, torque(t + half, s3));
    const BodyState s4 = advance(state, k3, dt);
    const Derivative k4 = evaluate(s4, inertia, torque(t + dt, s4));

    const double w = dt / 6.0;
    BodyState next;
    next.q = normalize(state.q + w * (k1.dq + 2.0 * k2.dq + 2.0 * k3.dq + k4.dq));
    next.omega = state.omega + w * (k1.domega + 2.0 * k2.domega + 2.0 * k3.domega + k4.domega);
    return next;
}

Vec3 correct_gyro(Vec3 raw, const SensorCalibration& cal) {
    return raw - cal.gyro_bias - cal.gyro_scale * raw;
}

Vec3 correct_accel(Vec3 raw, const SensorCalibration& cal) {
    return raw - cal.accel_bias - cal.accel_scale * raw;
}

Vec3 gravity_in_body(Quaternion q, double g) { return rotate(conjugate(q), {0.0, 0.0, -g}); }

}  // namespace tepinn
