#pragma once

// Multiplicative extended Kalman filter with a 6-dimensional error state
// [δθ (body-frame attitude error), δb (gyro bias error)]. The accelerometer
// is treated as a gravity-direction sensor.

#include <Eigen/Core>
#include <vector>

#include "tepinn/imu_sim.hpp"
#include "tepinn/quat.hpp"

namespace tepinn {

using Mat6 = Eigen::Matrix<double, 6, 6>;

struct EkfState {
    Quaternion q = Quaternion::identity();
    Vec3 gyro_bias{};
    Mat6 P = Mat6::Identity();
};

struct EkfConfig {
    double gyro_noise = 0.01;        // rad/s, white noise density per sample
    double accel_noise = 0.1;        // m/s²
    double bias_walk = 1e-4;         // rad/s/√s
    double init_attitude_std = 0.1;  // rad
    double init_bias_std = 0.05;     // rad/s
    /// Updates are skipped when | |a| − g | exceeds this, m/s².
    double gate = 0.5;
    double gravity = kGravity;

    /// Filter tuning matched to a dataset's noise description. Noise-free
    /// specs get small positive floors so the covariances stay regular.
    static EkfConfig from_noise(const NoiseSpec& noise);
};

/// Bias-corrected first-order quaternion integration and P ← F·P·Fᵀ + Q.
EkfState ekf_predict(const EkfState& s, Vec3 gyro, double dt, const EkfConfig& cfg);

/// Gravity-direction update in Joseph form. Returns the state unchanged
/// when the accelerometer magnitude fails the gate.
EkfState ekf_update(const EkfState& s, Vec3 accel, const EkfConfig& cfg);

/// Tilt-only attitude (zero yaw) that explains a static accelerometer reading.
Quaternion tilt_from_accel(Vec3 accel);

struct EkfRun {
    std::vector<Quaternion> q;
    std::vector<Vec3> gyro_bias;
    EkfState final_state;
    std::size_t updates_applied = 0;
};

/// Initializes from the first accelerometer sample, then predict/update per sample.
EkfRun run_ekf(const Trajectory& traj, const EkfConfig& cfg);

/// Largest |P − Pᵀ| entry and smallest eigenvalue, for invariant checks.
double asymmetry(const Mat6& P);
double min_eigenvalue(const Mat6& P);

}  // namespace tepinn
