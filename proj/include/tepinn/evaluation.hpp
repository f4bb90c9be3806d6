#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tepinn/ekf.hpp"
#include "tepinn/imu_sim.hpp"
#include "tepinn/quat.hpp"
#include "tepinn/transformer.hpp"

namespace tepinn {

/// Tilt: estimate and truth are both yaw-zeroed before comparison, so yaw
/// drift does not count and yaw RMSE is 0. Full: raw quaternions.
enum class ErrorMode { Tilt, Full };

ErrorMode parse_error_mode(const std::string& name);
std::string to_string(ErrorMode mode);

/// Rotation angle of q_true⁻¹ ⊗ q_est in [0, π]. Same quantity as
/// geodesic_error but via atan2, so identical inputs give exactly 0.
double attitude_error(Quaternion q_est, Quaternion q_true);

/// One compared sample.
struct EvalRecord {
    std::size_t file = 0;
    std::size_t index = 0;
    double t = 0.0;
    Quaternion estimate;
    Quaternion truth;
    EulerAngles estimate_euler;
    EulerAngles truth_euler;
    double error = 0.0;
    double rate = 0.0;
    /// |ω_true| above the trajectory's 75th percentile.
    bool dynamic = false;
};

struct EvalMetrics {
    std::string estimator;
    std::size_t samples = 0;
    double mean_geodesic = 0.0;
    double rmse_roll = 0.0;
    double rmse_pitch = 0.0;
    double rmse_yaw = 0.0;
    double dynamic_error = 0.0;
};

/// Estimates for samples [N-1, size): one window ending at each sample.
std::vector<Quaternion> tepinn_estimates(const Trajectory& traj, const EncoderParams& params);
/// EKF estimates over the same index range starting at `first`.
std::vector<Quaternion> ekf_estimates(const Trajectory& traj, const EkfConfig& cfg, std::size_t first);

/// Compares estimates[k] against truth at index first + k. Throws LengthMismatch
/// if the estimates run past the trajectory.
std::vector<EvalRecord> compare(const Trajectory& traj, std::size_t file, std::span<const Quaternion> estimates,
                                std::size_t first, ErrorMode mode);

/// Nearest-rank percentile of |ω_true| over indices [first, size).
double rate_percentile(const Trajectory& traj, std::size_t first, double p);

/// Aggregates records. The dynamic subset falls back to every sample when no
/// sample strictly exceeds the threshold (e.g. a static trajectory).
EvalMetrics summarize(const std::string& estimator, std::span<const EvalRecord> records);

inline constexpr const char* kReportHeader =
    "estimator,samples,mean_geodesic_rad,rmse_roll_rad,rmse_pitch_rad,rmse_yaw_rad,dynamic_error_rad";
inline constexpr const char* kTraceHeader =
    "file,index,t,qw,qx,qy,qz,qw_true,qx_true,qy_true,qz_true,roll,pitch,yaw,roll_true,pitch_true,yaw_true,error_rad,"
    "rate_true,dynamic";

std::string report_csv(std::span<const EvalMetrics> rows);
std::string trace_csv(std::span<const EvalRecord> records);

/// Wraps an angle difference into (-π, π].
double wrap_angle(double a);

}  // namespace tepinn
