#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "test_support.hpp"
#include "tepinn/error.hpp"
#include "tepinn/imu_sim.hpp"
#include "tepinn/io_util.hpp"

namespace tepinn {
namespace {

namespace fs = std::filesystem;

fs::path temp_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("tepinn_imu_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

bool bitwise_equal(const Trajectory& a, const Trajectory& b) {
    if (a.size() != b.size() || a.samples.size() != b.samples.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a.truth_q[i].to_array() != b.truth_q[i].to_array()) return false;
        if (!(a.truth_omega[i] == b.truth_omega[i])) return false;
    }
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        const ImuSample &x = a.samples[i], &y = b.samples[i];
        if (x.t != y.t || !(x.gyro == y.gyro) || !(x.accel == y.accel)) return false;
    }
    return true;
}

TEST(ImuSim, StaticProfileHoldsAttitude) {
    SimOptions opt;
    opt.initial_attitude = normalize({0.9, 0.2, -0.1, 0.3});
    const Trajectory t = generate_trajectory(StaticProfile{}, 2.0, 50.0, 3, opt);
    ASSERT_EQ(t.size(), 101u);
    ASSERT_EQ(t.samples.size(), t.size());
    ASSERT_EQ(t.truth_omega.size(), t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        EXPECT_EQ(t.truth_q[i].to_array(), t.truth_q[0].to_array());
        EXPECT_EQ(t.truth_omega[i], (Vec3{0, 0, 0}));
        EXPECT_DOUBLE_EQ(t.samples[i].t, static_cast<double>(i) / 50.0);
    }
    EXPECT_EQ(t.meta.peak_angular_velocity, 0.0);
    EXPECT_EQ(t.meta.profile, "static");
}

TEST(ImuSim, ConstantRateMatchesClosedForm) {
    const Vec3 omega{0, 0, std::numbers::pi / 2};
    const Trajectory t = generate_trajectory(ConstantRateProfile{omega}, 1.0, 100.0, 0);
    const Quaternion q = t.truth_q.back();
    EXPECT_NEAR(q.w, std::cos(std::numbers::pi / 4), 1e-6);
    EXPECT_NEAR(q.z, std::sin(std::numbers::pi / 4), 1e-6);
    EXPECT_NEAR(q.x, 0.0, 1e-12);
    EXPECT_NEAR(q.y, 0.0, 1e-12);
    EXPECT_NEAR(t.meta.peak_angular_velocity, std::numbers::pi / 2, 1e-12);
}

TEST(ImuSim, ConstantRateOnAsymmetricBodyStaysConstant) {
    // spin about a principal axis is an equilibrium of Euler's equations
    SimOptions opt;
    opt.inertia = InertiaFactor::from_diagonal(1.0, 2.0, 3.0);
    const Trajectory t = generate_trajectory(ConstantRateProfile{{0.0, 1.3, 0.0}}, 2.0, 100.0, 0, opt);
    for (const Vec3& w : t.truth_omega) EXPECT_NEAR(norm(w - Vec3{0, 1.3, 0}), 0.0, 1e-12);
}

TEST(ImuSim, SinusoidalPeakMatchesAmplitude) {
    const Trajectory t = generate_trajectory(SinusoidalProfile{2.0, 0.5}, 10.0, 100.0, 0);
    EXPECT_GT(t.meta.peak_angular_velocity, 1.0);
    EXPECT_LE(t.meta.peak_angular_velocity, 2.0 * std::sqrt(1.0 + 0.64 + 0.36) + 1e-6);
    for (const Quaternion& q : t.truth_q) EXPECT_NEAR(norm(q), 1.0, 1e-9);
}

TEST(ImuSim, GenerationIsDeterministic) {
    const auto a = generate_trajectory(RandomWalkProfile{0.5}, 3.0, 100.0, 42);
    const auto b = generate_trajectory(RandomWalkProfile{0.5}, 3.0, 100.0, 42);
    const auto c = generate_trajectory(RandomWalkProfile{0.5}, 3.0, 100.0, 43);
    EXPECT_TRUE(bitwise_equal(a, b));
    EXPECT_FALSE(bitwise_equal(a, c));

    const NoiseSpec noise = NoiseSpec::preset("mid");
    EXPECT_TRUE(bitwise_equal(synthesize_measurements(a, noise, 7), synthesize_measurements(b, noise, 7)));
    EXPECT_FALSE(bitwise_equal(synthesize_measurements(a, noise, 7), synthesize_measurements(a, noise, 8)));
}

TEST(ImuSim, ProfileParsing) {
    EXPECT_TRUE(std::holds_alternative<StaticProfile>(make_profile("static", {})));
    const auto cr = make_profile("constant-rate", {0.1, 0.2, 0.3});
    ASSERT_TRUE(std::holds_alternative<ConstantRateProfile>(cr));
    EXPECT_EQ(std::get<ConstantRateProfile>(cr).omega, (Vec3{0.1, 0.2, 0.3}));
    EXPECT_TRUE(std::holds_alternative<RandomWalkProfile>(make_profile("random_walk", {})));
    const auto s = make_profile("sinusoidal", {1.5, 0.25});
    EXPECT_EQ(std::get<SinusoidalProfile>(s).amplitude, 1.5);
    EXPECT_EQ(std::get<SinusoidalProfile>(s).frequency, 0.25);
    try {
        make_profile("figure-eight", {});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::UnknownProfile);
    }
}

TEST(ImuSim, ZeroNoiseIsExactModel) {
    SimOptions opt;
    opt.initial_attitude = normalize({0.8, 0.3, -0.4, 0.2});
    const Trajectory truth = generate_trajectory(SinusoidalProfile{}, 2.0, 100.0, 1, opt);
    const Trajectory m = synthesize_measurements(truth, NoiseSpec{}, 5);
    ASSERT_TRUE(m.meta.has_measurements);
    for (std::size_t i = 0; i < m.size(); ++i) {
        EXPECT_EQ(m.samples[i].gyro, truth.truth_omega[i]);
        EXPECT_EQ(m.samples[i].accel, gravity_in_body(truth.truth_q[i], kGravity));
    }
}

TEST(ImuSim, CorrectionInvertsCalibrationUpToQuadraticTerm) {
    NoiseSpec noise;
    noise.gyro_bias = {0.02, -0.01, 0.015};
    noise.accel_bias = {0.05, 0.03, -0.04};
    noise.gyro_scale = Mat3{{0.01, -0.005, 0.002, 0.003, -0.01, 0.004, -0.002, 0.006, 0.008}};
    noise.accel_scale = Mat3{{-0.01, 0.002, 0.0, 0.001, 0.01, -0.003, 0.004, 0.0, 0.005}};
    const SensorCalibration cal{noise.gyro_bias, noise.accel_bias, noise.gyro_scale, noise.accel_scale};

    const Trajectory truth = generate_trajectory(SinusoidalProfile{2.0, 0.5}, 3.0, 100.0, 2);
    const Trajectory m = synthesize_measurements(truth, noise, 9);
    double worst_g = 0.0, worst_a = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        worst_g = std::max(worst_g, norm(correct_gyro(m.samples[i].gyro, cal) - truth.truth_omega[i]));
        const Vec3 gb = gravity_in_body(truth.truth_q[i], kGravity);
        worst_a = std::max(worst_a, norm(correct_accel(m.samples[i].accel, cal) - gb) / kGravity);
    }
    EXPECT_LT(worst_g, 1e-3);
    EXPECT_LT(worst_a, 1e-3);
}

TEST(ImuSim, EmpiricalNoiseStdMatchesSpec) {
    NoiseSpec noise;
    noise.gyro_noise_std = 0.02;
    noise.accel_noise_std = 0.3;
    const Trajectory truth = generate_trajectory(StaticProfile{}, 999.99, 100.0, 0);
    ASSERT_EQ(truth.size(), 100000u);
    const Trajectory m = synthesize_measurements(truth, noise, 123);
    const Vec3 g = gravity_in_body(Quaternion::identity(), kGravity);
    double sg = 0.0, sa = 0.0, mg = 0.0;
    for (const ImuSample& s : m.samples) {
        sg += dot(s.gyro, s.gyro);
        mg += s.gyro.x + s.gyro.y + s.gyro.z;
        const Vec3 e = s.accel - g;
        sa += dot(e, e);
    }
    const double n = 3.0 * static_cast<double>(m.size());
    EXPECT_NEAR(std::sqrt(sg / n), 0.02, 0.05 * 0.02);
    EXPECT_NEAR(std::sqrt(sa / n), 0.3, 0.05 * 0.3);
    EXPECT_NEAR(mg / n, 0.0, 5.0 * 0.02 / std::sqrt(n));
}

TEST(ImuSim, NoisePresetsAndValidation) {
    const NoiseSpec low = NoiseSpec::preset("low"), high = NoiseSpec::preset("high");
    EXPECT_LT(low.gyro_noise_std, high.gyro_noise_std);
    EXPECT_LT(low.accel_noise_std, high.accel_noise_std);
    EXPECT_THROW(NoiseSpec::preset("extreme"), Error);
    NoiseSpec bad;
    bad.gyro_noise_std = -1.0;
    EXPECT_THROW(bad.validate(), Error);
    bad = NoiseSpec{};
    bad.sample_rate = 0.0;
    EXPECT_THROW(bad.validate(), Error);
}

TEST(ImuSim, DatasetRoundTrip) {
    const fs::path dir = temp_dir("roundtrip");
    const Trajectory truth = generate_trajectory(SinusoidalProfile{1.2, 0.4}, 1.5, 100.0, 11);
    const Trajectory m = synthesize_measurements(truth, NoiseSpec::preset("high"), 12);
    write_dataset(m, dir / "run.csv");
    ASSERT_TRUE(fs::exists(dir / "run.csv"));
    ASSERT_TRUE(fs::exists(dir / "run.meta.json"));
    const Trajectory r = read_dataset(dir / "run.csv");
    ASSERT_EQ(r.size(), m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
        EXPECT_NEAR(r.samples[i].t, m.samples[i].t, 1e-12);
        EXPECT_NEAR(norm(r.samples[i].gyro - m.samples[i].gyro), 0.0, 1e-12);
        EXPECT_NEAR(norm(r.samples[i].accel - m.samples[i].accel), 0.0, 1e-12);
        EXPECT_NEAR(norm(r.truth_q[i] - m.truth_q[i]), 0.0, 1e-12);
        EXPECT_NEAR(norm(r.truth_omega[i] - m.truth_omega[i]), 0.0, 1e-12);
    }
    EXPECT_EQ(r.meta.seed, 11u);
    EXPECT_EQ(r.meta.noise_seed, 12u);
    EXPECT_EQ(r.meta.profile, "sinusoidal");
    EXPECT_DOUBLE_EQ(r.meta.noise.gyro_noise_std, m.meta.noise.gyro_noise_std);
    EXPECT_EQ(r.meta.noise.gyro_bias, m.meta.noise.gyro_bias);
    fs::remove_all(dir);
}

TEST(ImuSim, EmptyTrajectoryWritesHeaderOnly) {
    const fs::path dir = temp_dir("empty");
    write_dataset(Trajectory{}, dir / "empty.csv");
    EXPECT_EQ(read_file(dir / "empty.csv"), std::string(kDatasetHeader) + "\n");
    EXPECT_EQ(read_dataset(dir / "empty.csv").size(), 0u);
    fs::remove_all(dir);
}

ErrorKind read_error(const fs::path& p) {
    try {
        read_dataset(p);
    } catch (const Error& e) {
        return e.kind();
    }
    return ErrorKind::InvalidArgument;
}

TEST(ImuSim, MalformedFilesRaiseParse) {
    const fs::path dir = temp_dir("malformed");
    const Trajectory m = synthesize_measurements(generate_trajectory(StaticProfile{}, 0.1, 100.0, 0), NoiseSpec{}, 0);
    write_dataset(m, dir / "good.csv");
    const std::string text = read_file(dir / "good.csv");

    std::ofstream(dir / "truncated.csv") << text.substr(0, text.size() - 25);
    EXPECT_EQ(read_error(dir / "truncated.csv"), ErrorKind::Parse);

    std::ofstream(dir / "header.csv") << "t,gx,gy\n" << text.substr(text.find('\n') + 1);
    EXPECT_EQ(read_error(dir / "header.csv"), ErrorKind::Parse);

    std::ofstream(dir / "arity.csv") << kDatasetHeader << "\n0,1,2,3\n";
    EXPECT_EQ(read_error(dir / "arity.csv"), ErrorKind::Parse);

    std::ofstream(dir / "time.csv") << kDatasetHeader << "\n"
                                    << "0.1,0,0,0,0,0,-9.81,1,0,0,0,0,0,0\n"
                                    << "0.1,0,0,0,0,0,-9.81,1,0,0,0,0,0,0\n";
    EXPECT_EQ(read_error(dir / "time.csv"), ErrorKind::Parse);

    std::ofstream(dir / "number.csv") << kDatasetHeader << "\n0,abc,0,0,0,0,-9.81,1,0,0,0,0,0,0\n";
    EXPECT_EQ(read_error(dir / "number.csv"), ErrorKind::Parse);

    EXPECT_EQ(read_error(dir / "missing.csv"), ErrorKind::Io);
    fs::remove_all(dir);
}

}  // namespace
}  // namespace tepinn
