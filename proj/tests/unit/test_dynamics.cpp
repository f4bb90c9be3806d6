#include <gtest/gtest.h>

#include <numbers>

#include "test_support.hpp"
#include "tepinn/dynamics.hpp"
#include "tepinn/error.hpp"

namespace tepinn {
namespace {

Quaternion constant_rate_closed_form(Vec3 omega, double t) {
    const double rate = norm(omega);
    const Vec3 axis = (1.0 / rate) * omega;
    const double s = std::sin(0.5 * rate * t);
    return {std::cos(0.5 * rate * t), s * axis.x, s * axis.y, s * axis.z};
}

BodyState integrate(BodyState s, const InertiaFactor& inertia, Vec3 tau, double dt, int steps) {
    for (int i = 0; i < steps; ++i) s = rk4_step(s, inertia, tau, dt);
    return s;
}

TEST(Dynamics, AngularAccelerationCases) {
    const InertiaFactor unit{};
    const Vec3 a = angular_acceleration(unit, {0.3, -1.0, 2.0}, {});
    EXPECT_EQ(a, (Vec3{0, 0, 0}));
    EXPECT_EQ(angular_acceleration(unit, {}, {1, 0, 0}), (Vec3{1, 0, 0}));

    // I = diag(1,2,3), ω = (1,1,1): Iω = (1,2,3), ω×Iω = (1,-2,1), ω̇ = -(1,-2,1)/(1,2,3)
    const InertiaFactor diag = InertiaFactor::from_diagonal(1, 2, 3);
    const Vec3 b = angular_acceleration(diag, {1, 1, 1}, {});
    EXPECT_NEAR(b.x, -1.0, 1e-14);
    EXPECT_NEAR(b.y, 1.0, 1e-14);
    EXPECT_NEAR(b.z, -1.0 / 3.0, 1e-14);
}

TEST(Dynamics, SolveMatchesGeneralTensor) {
    const Mat3 inertia{{2.0, 0.1, -0.2, 0.1, 1.5, 0.05, -0.2, 0.05, 1.2}};
    const InertiaFactor f = InertiaFactor::from_tensor(inertia);
    const Mat3 rebuilt = f.tensor();
    for (std::size_t k = 0; k < 9; ++k) EXPECT_NEAR(rebuilt.m[k], inertia.m[k], 1e-14);
    const Vec3 rhs{0.4, -1.1, 0.7};
    const Vec3 x = f.solve(rhs);
    const Vec3 back = inertia * x;
    EXPECT_NEAR(back.x, rhs.x, 1e-13);
    EXPECT_NEAR(back.y, rhs.y, 1e-13);
    EXPECT_NEAR(back.z, rhs.z, 1e-13);
}

TEST(Dynamics, SingularInertiaRaises) {
    InertiaFactor bad{};
    bad.lower(1, 1) = 1e-12;
    try {
        angular_acceleration(bad, {1, 0, 0}, {});
        FAIL() << "expected SingularInertia";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::SingularInertia);
    }
}

TEST(Dynamics, Rk4ConstantRateClosedForm) {
    const Vec3 omega{0, 0, std::numbers::pi / 2};
    const BodyState s = integrate({Quaternion::identity(), omega}, InertiaFactor{}, Vec3{}, 0.01, 100);
    const Quaternion expected{std::cos(std::numbers::pi / 4), 0, 0, std::sin(std::numbers::pi / 4)};
    EXPECT_NEAR(s.q.w, expected.w, 1e-6);
    EXPECT_NEAR(s.q.x, 0.0, 1e-12);
    EXPECT_NEAR(s.q.y, 0.0, 1e-12);
    EXPECT_NEAR(s.q.z, expected.z, 1e-6);
    EXPECT_EQ(s.omega, omega);
}

TEST(Dynamics, Rk4SingleUnitStepIsFourthOrderAccurate) {
    // one dt = 1 step: truncation error of the quaternion series is O((|ω|dt/2)^5)
    const Vec3 omega{0, 0, std::numbers::pi / 2};
    const BodyState s = rk4_step({Quaternion::identity(), omega}, InertiaFactor{}, Vec3{}, 1.0);
    const Quaternion expected{std::cos(std::numbers::pi / 4), 0, 0, std::sin(std::numbers::pi / 4)};
    const double half = std::numbers::pi / 4;
    const double bound = std::pow(half, 5) / 120.0 * 2.0;
    EXPECT_LT(norm(s.q - expected), bound);
}

TEST(Dynamics, Rk4StaticIsFixedPoint) {
    const BodyState s0{normalize({0.9, 0.1, -0.2, 0.3}), {}};
    const BodyState s1 = rk4_step(s0, InertiaFactor::from_diagonal(1, 2, 3), Vec3{}, 0.01);
    EXPECT_NEAR(s1.q.w, s0.q.w, 1e-15);
    EXPECT_NEAR(s1.q.x, s0.q.x, 1e-15);
    EXPECT_EQ(s1.omega, (Vec3{0, 0, 0}));
}

TEST(Dynamics, Rk4FourthOrderConvergence) {
    const Vec3 omega{1.0, -2.0, 2.5};
    const double horizon = 1.0;
    const Quaternion exact = constant_rate_closed_form(omega, horizon);
    double prev = 0.0;
    for (int k = 0; k < 4; ++k) {
        const int steps = 4 << k;
        const BodyState s = integrate({Quaternion::identity(), omega}, InertiaFactor{}, {}, horizon / steps, steps);
        const double err = norm(sign_align(s.q, exact) - exact);
        if (k > 0) {
            const double ratio = prev / err;
            EXPECT_GE(ratio, 12.0) << "halving " << k;
            EXPECT_LE(ratio, 20.0) << "halving " << k;
        }
        prev = err;
    }
}

TEST(Dynamics, TorqueFreeSphericalKeepsRate) {
    const InertiaFactor sphere = InertiaFactor::from_diagonal(2, 2, 2);
    BodyState s{Quaternion::identity(), {0.5, -1.2, 0.8}};
    const double rate = norm(s.omega);
    for (int i = 0; i < 5000; ++i) {
        s = rk4_step(s, sphere, Vec3{}, 0.01);
        ASSERT_NEAR(norm(s.omega), rate, 1e-9);
        ASSERT_NEAR(norm(s.q), 1.0, 1e-9);
    }
}

TEST(Dynamics, TorqueFreeAsymmetricConservesEnergyAndMomentum) {
    const InertiaFactor body = InertiaFactor::from_diagonal(1.0, 2.0, 3.0);
    BodyState s{Quaternion::identity(), {0.4, 1.0, -0.3}};
    auto energy = [&](Vec3 w) { return 0.5 * dot(w, body.apply(w)); };
    auto momentum_sq = [&](Vec3 w) { return dot(body.apply(w), body.apply(w)); };
    const double e0 = energy(s.omega), m0 = momentum_sq(s.omega);
    for (int i = 0; i < 2000; ++i) s = rk4_step(s, body, Vec3{}, 0.005);
    EXPECT_NEAR(energy(s.omega), e0, 1e-6);
    EXPECT_NEAR(momentum_sq(s.omega), m0, 1e-6);
}

TEST(Dynamics, SensorCorrections) {
    const SensorCalibration zero{};
    EXPECT_EQ(correct_gyro({1, 2, 3}, zero), (Vec3{1, 2, 3}));
    EXPECT_EQ(correct_accel({1, 2, 3}, zero), (Vec3{1, 2, 3}));

    const SensorCalibration bias({0.1, 0, 0}, {0, 0, 0.1}, Mat3::zero(), Mat3::zero());
    const Vec3 g = correct_gyro({1, 2, 3}, bias);
    EXPECT_NEAR(g.x, 0.9, 1e-15);
    EXPECT_EQ(g.y, 2.0);
    const Vec3 a = correct_accel({0, 0, 9.81}, bias);
    EXPECT_NEAR(a.z, 9.71, 1e-14);

    const SensorCalibration scale({}, {}, 0.01 * Mat3::identity(), Mat3::diag(0.1, 0, 0));
    EXPECT_NEAR(correct_gyro({1, 0, 0}, scale).x, 0.99, 1e-15);
    const Vec3 sa = correct_accel({1, 1, 1}, scale);
    EXPECT_NEAR(sa.x, 0.9, 1e-15);
    EXPECT_EQ(sa.y, 1.0);
    EXPECT_EQ(sa.z, 1.0);
}

TEST(Dynamics, CorrectionsAreAffine) {
    std::mt19937_64 rng(11);
    const Mat3 s_g{{0.01, 0.002, 0, -0.003, 0.02, 0.001, 0, 0.004, -0.01}};
    const SensorCalibration cal({0.1, -0.2, 0.05}, {0.3, 0.1, -0.1}, s_g, 0.5 * s_g);
    for (int i = 0; i < 100; ++i) {
        const Vec3 x = test::random_vec(rng, 3.0);
        const double alpha = 0.5 + i;
        for (auto f : {correct_gyro, correct_accel}) {
            const Vec3 lhs = f(alpha * x, cal) - f({}, cal);
            const Vec3 rhs = alpha * (f(x, cal) - f({}, cal));
            EXPECT_NEAR(lhs.x, rhs.x, 1e-12 * alpha);
            EXPECT_NEAR(lhs.y, rhs.y, 1e-12 * alpha);
            EXPECT_NEAR(lhs.z, rhs.z, 1e-12 * alpha);
        }
    }
}

TEST(Dynamics, CalibrationRejectsLargeScale) {
    EXPECT_THROW(SensorCalibration({}, {}, 1.2 * Mat3::identity(), Mat3::zero()), Error);
}

TEST(Dynamics, GravityInBody) {
    EXPECT_EQ(gravity_in_body(Quaternion::identity(), 9.81), (Vec3{0, 0, -9.81}));
    const Quaternion roll90 = from_euler({std::numbers::pi / 2, 0, 0});
    // matrix oracle: Rᵀ·(0,0,-g)
    const Mat3 r = test::matrix_from_euler({std::numbers::pi / 2, 0, 0});
    const Vec3 expected = transpose(r) * Vec3{0, 0, -9.81};
    const Vec3 g = gravity_in_body(roll90, 9.81);
    EXPECT_NEAR(g.x, expected.x, 1e-12);
    EXPECT_NEAR(g.y, expected.y, 1e-12);
    EXPECT_NEAR(g.z, expected.z, 1e-12);
    EXPECT_NEAR(g.y, -9.81, 1e-12);
    std::mt19937_64 rng(12);
    for (int i = 0; i < 200; ++i) EXPECT_NEAR(norm(gravity_in_body(test::random_unit_quaternion(rng), 9.81)), 9.81, 1e-12);
}

}  // namespace
}  // namespace tepinn
