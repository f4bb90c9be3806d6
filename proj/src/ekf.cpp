#include "tepinn/ekf.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "tepinn/error.hpp"

namespace tepinn {

namespace {

using Mat3e = Eigen::Matrix3d;
using Vec3e = Eigen::Vector3d;

Vec3e to_eigen(Vec3 v) { return {v.x, v.y, v.z}; }
Vec3 from_eigen(const Vec3e& v) { return {v.x(), v.y(), v.z()}; }

Mat3e skew(const Vec3e& v) {
    Mat3e m;
    m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
    return m;
}

void symmetrize(Mat6& P) { P = 0.5 * (P + P.transpose()).eval(); }

}  // namespace

EkfConfig EkfConfig::from_noise(const NoiseSpec& noise) {
    EkfConfig c;
    c.gyro_noise = std::max(noise.gyro_noise_std, 1e-4);
    c.accel_noise = std::max(noise.accel_noise_std, 1e-3);
    return c;
}

EkfState ekf_predict(const EkfState& s, Vec3 gyro, double dt, const EkfConfig& cfg) {
    if (!(dt > 0.0)) throw Error(ErrorKind::InvalidArgument, "ekf_predict: dt must be positive");
    const Vec3 omega = gyro - s.gyro_bias;
    EkfState out = s;
    const Quaternion dq = multiply(s.q, Quaternion::pure(omega));
    out.q = normalize(s.q + (0.5 * dt) * dq);

    Mat6 F = Mat6::Identity();
    F.block<3, 3>(0, 0) -= skew(to_eigen(omega)) * dt;
    F.block<3, 3>(0, 3) = -Mat3e::Identity() * dt;
    Mat6 Q = Mat6::Zero();
    Q.block<3, 3>(0, 0) = Mat3e::Identity() * (cfg.gyro_noise * cfg.gyro_noise * dt);
    Q.block<3, 3>(3, 3) = Mat3e::Identity() * (cfg.bias_walk * cfg.bias_walk * dt);
    out.P = F * s.P * F.transpose() + Q;
    symmetrize(out.P);
    return out;
}

EkfState ekf_update(const EkfState& s, Vec3 accel, const EkfConfig& cfg) {
    const double mag = norm(accel);
    if (!(mag > 0.0) || std::abs(mag - cfg.gravity) > cfg.gate) return s;

    const Vec3e z = to_eigen(accel) / mag;
    const Vec3e h = to_eigen(gravity_in_body(s.q, 1.0));
    Eigen::Matrix<double, 3, 6> H = Eigen::Matrix<double, 3, 6>::Zero();
    H.block<3, 3>(0, 0) = skew(h);
    const double sigma = cfg.accel_noise / cfg.gravity;
    const Mat3e R = Mat3e::Identity() * (sigma * sigma);

    const Mat3e S = H * s.P * H.transpose() + R;
    const Eigen::Matrix<double, 6, 3> K = s.P * H.transpose() * S.ldlt().solve(Mat3e::Identity());
    const Eigen::Matrix<double, 6, 1> dx = K * (z - h);

    EkfState out = s;
    const Vec3 dtheta = from_eigen(dx.head<3>());
    out.q = normalize(multiply(s.q, from_rotation_vector(dtheta)));
    out.gyro_bias = s.gyro_bias + from_eigen(dx.tail<3>());
    const Mat6 IKH = Mat6::Identity() - K * H;
    out.P = IKH * s.P * IKH.transpose() + K * R * K.transpose();
    // Reset: re-express the attitude error in the corrected body frame. Rotating
    // by Exp(−δθ) keeps the gravity axis (yaw) in the null space of the next H.
    const Mat3 rot = to_rotation_matrix(from_rotation_vector(dtheta));
    Mat6 G = Mat6::Identity();
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) G(r, c) = rot(static_cast<std::size_t>(c), static_cast<std::size_t>(r));
    out.P = G * out.P * G.transpose();
    symmetrize(out.P);
    return out;
}

Quaternion tilt_from_accel(Vec3 accel) {
    const double mag = norm(accel);
    if (!(mag > 0.0)) return Quaternion::identity();
    const Vec3 a = (1.0 / mag) * accel;
    // accel = −g·(−sinθ, sinφ·cosθ, cosφ·cosθ) for a zero-yaw attitude
    const double pitch = std::asin(std::clamp(a.x, -1.0, 1.0));
    const double roll = std::atan2(-a.y, -a.z);
    return from_euler({roll, pitch, 0.0});
}

EkfRun run_ekf(const Trajectory& traj, const EkfConfig& cfg) {
    EkfRun run;
    if (traj.samples.empty()) return run;
    EkfState s;
    s.q = tilt_from_accel(traj.samples.front().accel);
    s.P = Mat6::Zero();
    s.P.block<3, 3>(0, 0) = Mat3e::Identity() * (cfg.init_attitude_std * cfg.init_attitude_std);
    s.P.block<3, 3>(3, 3) = Mat3e::Identity() * (cfg.init_bias_std * cfg.init_bias_std);
    run.q.reserve(traj.samples.size());
    for (std::size_t i = 0; i < traj.samples.size(); ++i) {
        if (i > 0) {
            const double dt = traj.samples[i].t - traj.samples[i - 1].t;
            s = ekf_predict(s, traj.samples[i - 1].gyro, dt, cfg);
            const EkfState before = s;
            s = ekf_update(s, traj.samples[i].accel, cfg);
            if (s.q.to_array() != before.q.to_array() || !(s.P == before.P)) ++run.updates_applied;
        }
        run.q.push_back(s.q);
        run.gyro_bias.push_back(s.gyro_bias);
    }
    run.final_state = s;
    return run;
}

double asymmetry(const Mat6& P) { return (P - P.transpose()).cwiseAbs().maxCoeff(); }

double min_eigenvalue(const Mat6& P) {
    Eigen::SelfAdjointEigenSolver<Mat6> es(0.5 * (P + P.transpose()));
    return es.eigenvalues().minCoeff();
}

}  // namespace tepinn
