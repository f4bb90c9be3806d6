#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <random>

#include "tepinn/autodiff/grad_check.hpp"
#include "tepinn/checkpoint.hpp"
#include "tepinn/error.hpp"
#include "tepinn/io_util.hpp"
#include "tepinn/trainer.hpp"

namespace tepinn {
namespace {

namespace fs = std::filesystem;
using ad::Parameter;
using ad::Tensor;

EncoderConfig tiny_encoder() {
    EncoderConfig c;
    c.d_model = 8;
    c.n_layers = 1;
    c.n_heads = 2;
    c.d_ff = 16;
    c.window_len = 8;
    return c;
}

std::vector<Trajectory> toy_data(double duration = 2.0, std::uint64_t seed = 1) {
    const Trajectory t = generate_trajectory(SinusoidalProfile{1.0, 0.5}, duration, 100.0, seed);
    return {synthesize_measurements(t, NoiseSpec::preset("mid"), seed + 1)};
}

TrainConfig quick_config() {
    TrainConfig c;
    c.epochs = 2;
    c.batch_size = 4;
    c.lr_network = 3e-3;
    c.lr_physics = 1e-3;
    c.seed = 5;
    return c;
}

std::vector<Tensor> snapshot(const ModelParams& m) {
    std::vector<Tensor> out;
    for (const Parameter* p : m.all()) out.push_back(p->value);
    return out;
}

TEST(Trainer, WindowExtraction) {
    const auto data = toy_data(1.0);  // 101 samples
    const auto w = extract_windows(data, 32);
    ASSERT_EQ(w.size(), 5u);  // starts 0, 16, 32, 48, 64
    EXPECT_EQ(w.back().start, 64u);
    try {
        extract_windows(data, 500);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::EmptyDataset);
    }
    EXPECT_THROW(extract_windows({}, 8), Error);
}

TEST(Trainer, FullObjectiveGradientCheck) {
    EncoderConfig ec = tiny_encoder();
    ec.window_len = 4;
    ModelParams model(ec, 3);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-0.02, 0.02);
    for (const char* name : {kGyroBias, kAccelBias, kGyroScale, kAccelScale}) {
        for (double& v : model.physics_param(name).value.data()) v = u(rng);
    }
    const auto data = toy_data(0.5, 7);
    const std::vector<WindowRef> batch{{0, 0}, {0, 13}};
    TrainConfig cfg = quick_config();
    auto check = [&](const LossWeights& w, std::span<Parameter* const> params) {
        const ad::GradCheckResult r = ad::grad_check(
            [&](ad::Tape& t) { return minibatch_objective(t, model, data, batch, cfg, w, 1.0, 0); }, params);
        EXPECT_LT(r.max_rel_error, 1e-3) << r.worst_param << "[" << r.worst_index << "] analytic " << r.analytic
                                         << " numeric " << r.numeric;
    };
    // the attention key bias has an exactly zero gradient (softmax shift
    // invariance), so finite differences there are pure rounding noise
    auto no_key_bias = [](std::vector<Parameter*> ps) {
        std::erase_if(ps, [](const Parameter* p) { return p->name.ends_with(".attn.bk"); });
        return ps;
    };
    // every parameter, without the dynamics term
    check(LossWeights{0.3, 0.5, 0.0, 0.1}, no_key_bias(model.all()));
    // with it, the calibration enters the dynamics residual detached (a deliberate
    // stop-gradient), so only the parameters it differentiates are compared
    std::vector<Parameter*> differentiated = model.encoder.pointers();
    differentiated.push_back(&model.physics_param(kInertiaLower));
    check(LossWeights{0.3, 0.5, 0.2, 0.1}, no_key_bias(differentiated));
}

TEST(Trainer, ZeroLearningRateLeavesParamsBitwise) {
    const auto data = toy_data();
    ModelParams m(tiny_encoder(), 1);
    const auto before = snapshot(m);
    TrainConfig c = quick_config();
    c.lr_network = 0.0;
    c.lr_physics = 0.0;
    Trainer t(m, data, c, LossWeights{});
    t.run();
    EXPECT_EQ(snapshot(m), before);
}

TEST(Trainer, DeterministicUnderSeed) {
    const auto data = toy_data();
    auto train_once = [&] {
        ModelParams m(tiny_encoder(), 2);
        Trainer t(m, data, quick_config(), LossWeights{});
        const auto logs = t.run();
        return std::make_pair(logs.back().mean.total, snapshot(m));
    };
    const auto a = train_once(), b = train_once();
    EXPECT_EQ(a.first, b.first);
    EXPECT_EQ(a.second, b.second);
}

TEST(Trainer, LossDecreasesOnToyData) {
    const auto data = toy_data(6.0);
    ModelParams m(tiny_encoder(), 3);
    TrainConfig c = quick_config();
    c.epochs = 8;
    Trainer t(m, data, c, LossWeights{});
    const auto logs = t.run();
    EXPECT_LT(logs.back().mean.total, logs.front().mean.total);
}

TEST(Trainer, SingleWindowOverfit) {
    const auto data = toy_data(0.5);
    ModelParams m(tiny_encoder(), 4);
    TrainConfig c;
    c.batch_size = 1;
    c.lr_network = 1e-3;
    c.seed = 1;
    c.log_every = 0;
    const LossWeights data_only{0, 0, 0, 0};
    std::vector<Trajectory> single(1);
    single[0].meta = data[0].meta;
    for (std::size_t i = 20; i < 20 + 8; ++i) {
        single[0].samples.push_back(data[0].samples[i]);
        single[0].truth_q.push_back(data[0].truth_q[i]);
        single[0].truth_omega.push_back(data[0].truth_omega[i]);
    }
    c.epochs = 500;
    Trainer t(m, single, c, data_only);
    ASSERT_EQ(t.steps_per_epoch(), 1u);
    t.run();
    const LossBreakdown b = minibatch_loss(m, single, std::vector<WindowRef>{{0, 0}}, c, data_only, 1.0, false, 0);
    EXPECT_LT(b.data, 1e-4);
}

TEST(Trainer, ProjectionLeavesValidParamsUnchanged) {
    ModelParams m(tiny_encoder(), 5);
    m.physics_param(kGyroScale).value = Tensor::matrix(3, 3, {0.01, 0.002, 0, 0, -0.02, 0, 0.001, 0, 0.005});
    m.physics_param(kInertiaLower).value = Tensor::matrix(3, 3, {1.2, 0, 0, 0.1, 0.9, 0, -0.05, 0.2, 1.1});
    const auto before = snapshot(m);
    project_constraints(m);
    EXPECT_EQ(snapshot(m), before);
}

TEST(Trainer, ProjectionClampsNegativeDiagonal) {
    ModelParams m(tiny_encoder(), 6);
    m.physics_param(kInertiaLower).value = Tensor::matrix(3, 3, {-0.5, 0.3, 0.2, 0.1, 0.9, 0.4, 0.0, 0.2, 1e-9});
    project_constraints(m);
    const Tensor& l = m.physics_param(kInertiaLower).value;
    EXPECT_EQ(l(0, 0), kMinInertiaDiagonal);
    EXPECT_EQ(l(2, 2), kMinInertiaDiagonal);
    EXPECT_EQ(l(1, 1), 0.9);
    EXPECT_EQ(l(0, 1), 0.0);
    EXPECT_EQ(l(0, 2), 0.0);
    EXPECT_EQ(l(1, 2), 0.0);
}

TEST(Trainer, ProjectionInvariantsAndIdempotence) {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        ModelParams m(tiny_encoder(), 7);
        const double spread = trial % 2 == 0 ? 0.2 : 2.0;
        for (const char* name : {kGyroScale, kAccelScale, kInertiaLower})
            for (double& v : m.physics_param(name).value.data()) v = spread * g(rng);
        project_constraints(m);
        const Tensor& l = m.physics_param(kInertiaLower).value;
        for (std::size_t r = 0; r < 3; ++r) {
            EXPECT_GE(l(r, r), kMinInertiaDiagonal);
            for (std::size_t c = r + 1; c < 3; ++c) EXPECT_EQ(l(r, c), 0.0);
        }
        EXPECT_NO_THROW(m.inertia().solve({1, 2, 3}));
        const SensorCalibration cal = m.calibration();
        EXPECT_LT(spectral_radius(cal.gyro_scale), kScaleRadiusLimit);
        EXPECT_LT(spectral_radius(cal.accel_scale), kScaleRadiusLimit);

        const auto once = snapshot(m);
        project_constraints(m);
        EXPECT_EQ(snapshot(m), once);
    }
}

TEST(Trainer, ClippingPreservesDirection) {
    Parameter a("a", Tensor({4})), b("b", Tensor({2, 3}));
    std::mt19937_64 rng(8);
    std::normal_distribution<double> g(0.0, 3.0);
    for (double& v : a.grad.data()) v = g(rng);
    for (double& v : b.grad.data()) v = g(rng);
    std::vector<double> before(a.grad.data().begin(), a.grad.data().end());
    before.insert(before.end(), b.grad.data().begin(), b.grad.data().end());
    Parameter* ps[] = {&a, &b};
    const double norm_before = clip_global_norm(ps, 1.0);
    ASSERT_GT(norm_before, 1.0);
    std::vector<double> after(a.grad.data().begin(), a.grad.data().end());
    after.insert(after.end(), b.grad.data().begin(), b.grad.data().end());
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < before.size(); ++i) {
        dot += before[i] * after[i];
        na += before[i] * before[i];
        nb += after[i] * after[i];
    }
    EXPECT_NEAR(std::sqrt(nb), 1.0, 1e-12);
    EXPECT_NEAR(dot / std::sqrt(na * nb), 1.0, 1e-12);
    EXPECT_NEAR(clip_global_norm(ps, 1.0), 1.0, 1e-12);
}

TEST(Trainer, WarmupRamp) {
    EXPECT_DOUBLE_EQ(physics_warmup_scale(0, 100, 0.1), 0.1);
    EXPECT_DOUBLE_EQ(physics_warmup_scale(4, 100, 0.1), 0.5);
    EXPECT_DOUBLE_EQ(physics_warmup_scale(50, 100, 0.1), 1.0);
    EXPECT_DOUBLE_EQ(physics_warmup_scale(0, 100, 0.0), 1.0);
}

TEST(Trainer, NanLossRestoresParams) {
    auto data = toy_data();
    data[0].samples[30].gyro.x = std::numeric_limits<double>::quiet_NaN();
    ModelParams m(tiny_encoder(), 9);
    TrainConfig c = quick_config();
    c.batch_size = 1000;  // every window in one step
    Trainer t(m, data, c, LossWeights{});
    const auto before = snapshot(m);
    try {
        t.step();
        FAIL() << "expected NanLoss";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NanLoss);
    }
    EXPECT_EQ(snapshot(m), before);
}

TEST(Trainer, ConfigValidation) {
    TrainConfig c;
    c.batch_size = 0;
    EXPECT_THROW(c.validate(), Error);
    c = TrainConfig{};
    c.physics_span = 2;
    EXPECT_THROW(c.validate(), Error);
    c = TrainConfig{};
    c.lr_network = -1.0;
    EXPECT_THROW(c.validate(), Error);
}

Checkpoint trained_checkpoint(const std::vector<Trajectory>& data, std::size_t steps) {
    Checkpoint ck;
    ck.init_seed = 11;
    ck.model = ModelParams(tiny_encoder(), ck.init_seed);
    ck.train = quick_config();
    ck.weights = LossWeights{};
    Trainer t(ck.model, data, ck.train, ck.weights);
    for (std::size_t i = 0; i < steps; ++i) t.step();
    ck.optimizer = t.optimizer();
    ck.epoch = t.epoch();
    ck.step_in_epoch = t.step_in_epoch();
    return ck;
}

TEST(Checkpoint, RoundTripIsBitExact) {
    const auto data = toy_data();
    const Checkpoint ck = trained_checkpoint(data, 3);
    const fs::path path = fs::temp_directory_path() / "tepinn_ck_roundtrip.bin";
    save_checkpoint(ck, path);
    const Checkpoint back = load_checkpoint(path);
    EXPECT_EQ(snapshot(back.model), snapshot(ck.model));
    EXPECT_EQ(back.model.encoder.config(), ck.model.encoder.config());
    EXPECT_EQ(back.train, ck.train);
    EXPECT_EQ(back.weights, ck.weights);
    EXPECT_EQ(back.optimizer.step, 3u);
    EXPECT_EQ(back.optimizer.m, ck.optimizer.m);
    EXPECT_EQ(back.optimizer.v, ck.optimizer.v);
    EXPECT_EQ(back.epoch, ck.epoch);
    EXPECT_EQ(back.step_in_epoch, ck.step_in_epoch);
    EXPECT_EQ(back.init_seed, ck.init_seed);
    EXPECT_EQ(encode_checkpoint(back), encode_checkpoint(ck));
    fs::remove(path);
}

TEST(Checkpoint, VersionMismatchRaises) {
    const auto data = toy_data();
    std::string bytes = encode_checkpoint(trained_checkpoint(data, 0));
    bytes[8] = 7;  // version field follows the 8-byte magic
    try {
        decode_checkpoint(bytes);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::VersionMismatch);
    }
}

TEST(Checkpoint, CorruptInputRaisesParse) {
    const auto data = toy_data();
    const std::string bytes = encode_checkpoint(trained_checkpoint(data, 0));
    for (const std::string& bad : {std::string("NOTACKPT"), bytes.substr(0, bytes.size() - 3), bytes.substr(0, 30)}) {
        try {
            decode_checkpoint(bad);
            FAIL();
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::Parse);
        }
    }
}

TEST(Checkpoint, ResumeContinuesLossTrajectory) {
    const auto data = toy_data();
    // uninterrupted reference
    ModelParams ref(tiny_encoder(), 11);
    Trainer rt(ref, data, quick_config(), LossWeights{});
    for (int i = 0; i < 4; ++i) rt.step();
    const LossBreakdown expected = rt.step();

    Checkpoint ck = decode_checkpoint(encode_checkpoint(trained_checkpoint(data, 4)));
    Trainer resumed(ck.model, data, ck.train, ck.weights);
    resumed.restore(ck.optimizer, ck.epoch, ck.step_in_epoch);
    const LossBreakdown got = resumed.step();
    EXPECT_NEAR(got.total, expected.total, 1e-9);
    EXPECT_EQ(snapshot(ck.model), snapshot(ref));
}

}  // namespace
}  // namespace tepinn
