#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "tepinn/dynamics.hpp"
#include "tepinn/quat.hpp"

namespace tepinn {

struct ImuSample {
    double t = 0.0;
    Vec3 gyro{};   // rad/s
    Vec3 accel{};  // m/s²
};

struct NoiseSpec {
    double gyro_noise_std = 0.0;   // rad/s
    double accel_noise_std = 0.0;  // m/s²
    Vec3 gyro_bias{};
    Vec3 accel_bias{};
    Mat3 gyro_scale = Mat3::zero();
    Mat3 accel_scale = Mat3::zero();
    double sample_rate = 100.0;  // Hz

    /// "low", "mid" or "high". Throws InvalidArgument otherwise.
    static NoiseSpec preset(const std::string& name, double sample_rate = 100.0);
    void validate() const;
};

struct StaticProfile {};
struct ConstantRateProfile {
    Vec3 omega{};
};
/// Per-axis ω_i(t) = amplitude · w_i · sin(2π f_i t + φ_i) with fixed axis
/// weights, frequency multipliers and phases.
struct SinusoidalProfile {
    double amplitude = 1.0;  // rad/s
    double frequency = 0.5;  // Hz
};
/// Damped body driven by a torque random walk with step std `sigma`·√dt.
struct RandomWalkProfile {
    double sigma = 0.5;  // N·m/√s
};

using MotionProfile = std::variant<StaticProfile, ConstantRateProfile, SinusoidalProfile, RandomWalkProfile>;

std::string profile_name(const MotionProfile& profile);

struct TrajectoryMeta {
    std::string profile = "static";
    std::vector<double> profile_params;
    double duration = 0.0;
    double rate = 100.0;
    std::uint64_t seed = 0;
    double peak_angular_velocity = 0.0;
    bool has_measurements = false;
    NoiseSpec noise;
    std::uint64_t noise_seed = 0;
};

struct Trajectory {
    std::vector<ImuSample> samples;
    std::vector<Quaternion> truth_q;
    std::vector<Vec3> truth_omega;
    TrajectoryMeta meta;

    std::size_t size() const { return truth_q.size(); }
};

struct SimOptions {
    Quaternion initial_attitude = Quaternion::identity();
    InertiaFactor inertia{};
};

/// Integrates rigid-body motion with rk4_step. Sample timestamps are i / rate.
/// Measurement fields are left zero until synthesize_measurements.
Trajectory generate_trajectory(const MotionProfile& profile, double duration, double rate, std::uint64_t seed,
                               const SimOptions& options = {});

/// Parses a profile name ("static", "constant-rate", "sinusoidal",
/// "random-walk", underscores accepted) with its numeric parameters.
/// Throws UnknownProfile.
MotionProfile make_profile(const std::string& name, const std::vector<double>& params);

/// gyro = ω + S_g·ω + b_g + η_g, accel = g_b + S_a·g_b + b_a + η_a with
/// g_b = gravity_in_body(q_true) and η zero-mean Gaussian.
Trajectory synthesize_measurements(const Trajectory& truth, const NoiseSpec& noise, std::uint64_t seed);

inline constexpr const char* kDatasetHeader = "t,gx,gy,gz,ax,ay,az,qw,qx,qy,qz,wx,wy,wz";

/// CSV plus `<stem>.meta.json` sidecar, both written atomically.
void write_dataset(const Trajectory& traj, const std::filesystem::path& path);
/// Throws Io or Parse. The sidecar is optional.
Trajectory read_dataset(const std::filesystem::path& path);

std::filesystem::path meta_path_for(const std::filesystem::path& csv_path);

}  // namespace tepinn
