#include "tepinn/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "tepinn/error.hpp"
#include "tepinn/kernels/kernels.hpp"
#include "tepinn/quat_ops.hpp"

namespace tepinn {

using ad::Parameter;
using ad::Tape;
using ad::Tensor;
using ad::Var;

namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;
constexpr double kInertiaTrace = 3.0;

Mat3 to_mat3(const Tensor& t) {
    Mat3 m;
    std::copy(t.data().begin(), t.data().end(), m.m.begin());
    return m;
}

Vec3 to_vec3(const Tensor& t) { return {t[0], t[1], t[2]}; }

void shrink_scale(Tensor& s) {
    const double rho = spectral_radius(to_mat3(s));
    if (rho < kScaleRadiusLimit) return;
    const double factor = kScaleRadiusLimit * 0.999 / rho;
    for (double& v : s.data()) v *= factor;
}

void normalize_inertia_trace(Tensor& lower) {
    // trace(L·Lᵀ) = Σ L_ij²
    double trace = 0.0;
    for (double v : lower.data()) trace += v * v;
    if (trace == kInertiaTrace || !(trace > 0.0)) return;
    const double factor = std::sqrt(kInertiaTrace / trace);
    for (double& v : lower.data()) v *= factor;
    for (std::size_t i = 0; i < 3; ++i) lower(i, i) = std::max(lower(i, i), kMinInertiaDiagonal);
}

Tensor rows3(std::span<const ImuSample> samples, bool gyro) {
    Tensor t({samples.size(), 3});
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const Vec3& v = gyro ? samples[i].gyro : samples[i].accel;
        t(i, 0) = v.x;
        t(i, 1) = v.y;
        t(i, 2) = v.z;
    }
    return t;
}

double sample_interval(const Trajectory& traj) {
    if (traj.meta.rate > 0.0) return 1.0 / traj.meta.rate;
    if (traj.samples.size() >= 2) return traj.samples[1].t - traj.samples[0].t;
    throw Error(ErrorKind::InvalidArgument, "cannot infer sample interval");
}

bool grads_finite(std::span<Parameter* const> params) {
    for (const Parameter* p : params)
        if (!p->grad.all_finite()) return false;
    return true;
}

}  // namespace

void TrainConfig::validate() const {
    if (epochs == 0) throw Error(ErrorKind::InvalidArgument, "epochs must be >= 1");
    if (batch_size == 0) throw Error(ErrorKind::InvalidArgument, "batch_size must be >= 1");
    if (!(lr_network >= 0.0) || !(lr_physics >= 0.0)) throw Error(ErrorKind::InvalidArgument, "learning rates must be >= 0");
    if (!(lr_decay > 0.0)) throw Error(ErrorKind::InvalidArgument, "lr_decay must be > 0");
    if (!(grad_clip >= 0.0)) throw Error(ErrorKind::InvalidArgument, "grad_clip must be >= 0");
    if (!(physics_warmup >= 0.0 && physics_warmup <= 1.0)) {
        throw Error(ErrorKind::InvalidArgument, "physics_warmup must lie in [0, 1]");
    }
    if (physics_span < 3) throw Error(ErrorKind::InvalidArgument, "physics_span must be >= 3");
}

ModelParams::ModelParams(const EncoderConfig& config, std::uint64_t seed) : encoder(config, seed) {
    physics.emplace_back(kGyroBias, Tensor({3}));
    physics.emplace_back(kAccelBias, Tensor({3}));
    physics.emplace_back(kGyroScale, Tensor({3, 3}));
    physics.emplace_back(kAccelScale, Tensor({3, 3}));
    physics.emplace_back(kInertiaLower, Tensor::matrix(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1}));
}

Parameter& ModelParams::physics_param(const std::string& name) {
    for (Parameter& p : physics)
        if (p.name == name) return p;
    throw Error(ErrorKind::InvalidArgument, "unknown physics parameter " + name);
}

const Parameter& ModelParams::physics_param(const std::string& name) const {
    return const_cast<ModelParams*>(this)->physics_param(name);
}

SensorCalibration ModelParams::calibration() const {
    return SensorCalibration(to_vec3(physics_param(kGyroBias).value), to_vec3(physics_param(kAccelBias).value),
                             to_mat3(physics_param(kGyroScale).value), to_mat3(physics_param(kAccelScale).value));
}

InertiaFactor ModelParams::inertia() const { return InertiaFactor{to_mat3(physics_param(kInertiaLower).value)}; }

std::vector<Parameter*> ModelParams::all() {
    std::vector<Parameter*> out = encoder.pointers();
    for (Parameter& p : physics) out.push_back(&p);
    return out;
}

std::vector<const Parameter*> ModelParams::all() const {
    std::vector<const Parameter*> out;
    for (const Parameter& p : encoder.list()) out.push_back(&p);
    for (const Parameter& p : physics) out.push_back(&p);
    return out;
}

void project_constraints(ModelParams& model) {
    Tensor& lower = model.physics_param(kInertiaLower).value;
    for (std::size_t r = 0; r < 3; ++r) {
        for (std::size_t c = r + 1; c < 3; ++c) lower(r, c) = 0.0;
        lower(r, r) = std::max(lower(r, r), kMinInertiaDiagonal);
    }
    shrink_scale(model.physics_param(kGyroScale).value);
    shrink_scale(model.physics_param(kAccelScale).value);
}

std::vector<WindowRef> extract_windows(std::span<const Trajectory> data, std::size_t window_len) {
    const std::size_t stride = std::max<std::size_t>(1, window_len / 2);
    std::vector<WindowRef> out;
    for (std::size_t t = 0; t < data.size(); ++t) {
        const std::size_t n = data[t].samples.size();
        if (data[t].truth_q.size() != n) throw Error(ErrorKind::InvalidArgument, "trajectory without measurements");
        for (std::size_t s = 0; s + window_len <= n; s += stride) out.push_back({t, s});
    }
    if (out.empty()) throw Error(ErrorKind::EmptyDataset, "no window of length " + std::to_string(window_len) + " fits the data");
    return out;
}

Var minibatch_objective(Tape& tape, ModelParams& model, std::span<const Trajectory> data, std::span<const WindowRef> batch,
                        const TrainConfig& cfg, const LossWeights& weights, double physics_scale,
                        std::uint64_t dropout_seed, LossBreakdown* nominal) {
    if (batch.empty()) throw Error(ErrorKind::EmptyDataset, "empty minibatch");
    const EncoderConfig& ecfg = model.encoder.config();
    const std::size_t n = ecfg.window_len;
    const std::size_t span = std::min(cfg.physics_span, n);

    const BoundEncoder enc = bind(tape, model.encoder);
    const PhysicsVars phys{tape.param(model.physics_param(kGyroBias)), tape.param(model.physics_param(kAccelBias)),
                           tape.param(model.physics_param(kGyroScale)), tape.param(model.physics_param(kAccelScale)),
                           tape.param(model.physics_param(kInertiaLower))};
    // the dynamics residual assumes zero torque; keep it from steering the calibration
    const PhysicsVars phys_detached{tape.constant(phys.gyro_bias.value()), tape.constant(phys.accel_bias.value()),
                                    tape.constant(phys.gyro_scale.value()), tape.constant(phys.accel_scale.value()),
                                    phys.inertia_lower};

    std::vector<Var> data_terms, acc_terms, gyro_terms, dyn_terms;
    for (std::size_t k = 0; k < batch.size(); ++k) {
        const Trajectory& traj = data[batch[k].trajectory];
        const std::span<const ImuSample> window(traj.samples.data() + batch[k].start, n);
        const double dt = sample_interval(traj);

        std::mt19937_64 drop(dropout_seed + 0x9E3779B97F4A7C15ull * (k + 1));
        ForwardOptions fo;
        fo.training = true;
        fo.dropout_rng = &drop;
        const std::vector<double> ts = window_timestamps(window);
        const Var h = encoder_forward(tape, enc, build_input(window, n), ts, fo);
        const Var q = quaternion_head_rows(enc, h, span);

        const Var last = ad::slice_rows(q, span - 1, span);
        Quaternion truth = traj.truth_q[batch[k].start + n - 1];
        Var pred = last;
        if (ecfg.attitude_correction) {
            pred = qops::attitude_correct_rows(last);
            truth = attitude_correct(truth);
        }
        data_terms.push_back(data_loss(pred, std::span(&truth, 1)));

        const std::span<const ImuSample> tail = window.last(span);
        if (weights.acc > 0.0) acc_terms.push_back(acc_loss(q, tape.constant(rows3(tail, false)), phys));
        if (weights.gyro > 0.0) gyro_terms.push_back(gyro_loss(q, tape.constant(rows3(tail, true)), phys, dt));
        if (weights.dynamics > 0.0) {
            const Var omega = correct_gyro_rows(tape.constant(rows3(window, true)), phys_detached);
            dyn_terms.push_back(dynamics_loss(omega, phys.inertia_lower, Vec3{}, dt));
        }
    }

    const double inv_b = 1.0 / static_cast<double>(batch.size());
    auto batch_mean = [&](const std::vector<Var>& terms) {
        if (terms.empty()) return tape.constant(Tensor::scalar(0.0));
        Var acc = terms[0];
        for (std::size_t i = 1; i < terms.size(); ++i) acc = ad::add(acc, terms[i]);
        return ad::scale(acc, inv_b);
    };

    // L2 on weight matrices only; biases and layer-norm affines are left free
    std::vector<Var> decayed{enc.input_w, enc.head_w};
    for (const auto& L : enc.layers)
        for (Var v : {L.wq, L.wk, L.wv, L.wo, L.ff_w1, L.ff_w2}) decayed.push_back(v);

    LossTerms terms;
    terms.data = batch_mean(data_terms);
    terms.acc = batch_mean(acc_terms);
    terms.gyro = batch_mean(gyro_terms);
    terms.dynamics = batch_mean(dyn_terms);
    terms.weight_decay = weights.weight_decay > 0.0 ? sum_of_squares(decayed) : tape.constant(Tensor::scalar(0.0));

    LossWeights effective = weights;
    effective.acc *= physics_scale;
    effective.gyro *= physics_scale;
    effective.dynamics *= physics_scale;
    LossBreakdown b;
    const Var total = total_loss(terms, effective, &b);
    b.total = b.data + weights.acc * b.acc + weights.gyro * b.gyro + weights.dynamics * b.dynamics +
              weights.weight_decay * b.weight_decay;
    if (nominal) *nominal = b;
    return total;
}

LossBreakdown minibatch_loss(ModelParams& model, std::span<const Trajectory> data, std::span<const WindowRef> batch,
                             const TrainConfig& cfg, const LossWeights& weights, double physics_scale, bool backward,
                             std::uint64_t dropout_seed) {
    Tape tape;
    LossBreakdown b;
    const Var total = minibatch_objective(tape, model, data, batch, cfg, weights, physics_scale, dropout_seed, &b);
    if (backward) tape.backward(total);
    return b;
}

double clip_global_norm(std::span<Parameter* const> params, double max_norm) {
    const auto& k = kernels::active();
    double sq = 0.0;
    for (const Parameter* p : params) sq += k.dot(p->grad.ptr(), p->grad.ptr(), p->grad.size());
    const double norm = std::sqrt(sq);
    if (max_norm > 0.0 && norm > max_norm) {
        const double s = max_norm / norm;
        for (Parameter* p : params)
            for (double& g : p->grad.data()) g *= s;
    }
    return norm;
}

double physics_warmup_scale(std::size_t step, std::size_t total_steps, double warmup_fraction) {
    const double ramp = warmup_fraction * static_cast<double>(total_steps);
    if (ramp <= 1.0) return 1.0;
    return std::min(1.0, static_cast<double>(step + 1) / ramp);
}

Trainer::Trainer(ModelParams& model, std::span<const Trajectory> data, TrainConfig cfg, LossWeights weights)
    : model_(model), data_(data), cfg_(cfg), weights_(weights) {
    cfg_.validate();
    weights_.validate();
    windows_ = extract_windows(data_, model_.encoder.config().window_len);
    for (const Parameter* p : model_.all()) {
        opt_.m.emplace_back(p->value.shape());
        opt_.v.emplace_back(p->value.shape());
    }
}

void Trainer::restore(OptimizerState state, std::size_t epoch, std::size_t step_in_epoch) {
    const auto params = model_.all();
    if (state.m.size() != params.size() || state.v.size() != params.size()) {
        throw Error(ErrorKind::ShapeMismatch, "optimizer state does not match the model");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (state.m[i].shape() != params[i]->value.shape() || state.v[i].shape() != params[i]->value.shape()) {
            throw Error(ErrorKind::ShapeMismatch, "optimizer moment shape mismatch for " + params[i]->name);
        }
    }
    opt_ = std::move(state);
    epoch_ = epoch;
    step_in_epoch_ = step_in_epoch;
    epoch_sum_ = {};
    epoch_count_ = 0;
}

std::size_t Trainer::steps_per_epoch() const { return (windows_.size() + cfg_.batch_size - 1) / cfg_.batch_size; }

std::vector<std::size_t> Trainer::epoch_order(std::size_t epoch) const {
    std::vector<std::size_t> order(windows_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(cfg_.seed * 0x2545F4914F6CDD1Dull + epoch + 1);
    // Fisher-Yates with an explicit draw so the order is identical across standard libraries
    for (std::size_t i = order.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(order[i - 1], order[j]);
    }
    return order;
}

LossBreakdown Trainer::step() {
    if (done()) throw Error(ErrorKind::InvalidArgument, "training already finished");
    const std::vector<std::size_t> order = epoch_order(epoch_);
    const std::size_t lo = step_in_epoch_ * cfg_.batch_size;
    const std::size_t hi = std::min(order.size(), lo + cfg_.batch_size);
    std::vector<WindowRef> batch;
    for (std::size_t i = lo; i < hi; ++i) batch.push_back(windows_[order[i]]);

    const auto params = model_.all();
    std::vector<Tensor> saved;
    saved.reserve(params.size());
    for (Parameter* p : params) {
        saved.push_back(p->value);
        p->zero_grad();
    }
    auto fail = [&](const std::string& why) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            params[i]->value = saved[i];
            params[i]->zero_grad();
        }
        throw Error(ErrorKind::NanLoss, "non-finite loss at step " + std::to_string(opt_.step) + ": " + why);
    };

    const double scale = physics_warmup_scale(opt_.step, total_steps(), cfg_.physics_warmup);
    LossBreakdown b;
    try {
        b = minibatch_loss(model_, data_, batch, cfg_, weights_, scale, true, cfg_.seed ^ (opt_.step * 0xD1B54A32D192ED03ull));
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::NonFinite || e.kind() == ErrorKind::ZeroNorm) fail(e.what());
        throw;
    }
    if (!std::isfinite(b.total) || !grads_finite(params)) fail("loss or gradient is not finite");

    clip_global_norm(params, cfg_.grad_clip);

    const std::size_t t = opt_.step + 1;
    const double decay = std::pow(cfg_.lr_decay, static_cast<double>(epoch_));
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t));
    const std::size_t n_network = model_.encoder.list().size();
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double lr = (i < n_network ? cfg_.lr_network : cfg_.lr_physics) * decay;
        Parameter& p = *params[i];
        Tensor& m = opt_.m[i];
        Tensor& v = opt_.v[i];
        for (std::size_t j = 0; j < p.value.size(); ++j) {
            const double g = p.grad[j];
            m[j] = kBeta1 * m[j] + (1.0 - kBeta1) * g;
            v[j] = kBeta2 * v[j] + (1.0 - kBeta2) * g * g;
            if (lr == 0.0) continue;
            p.value[j] -= lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + kAdamEps);
        }
    }
    opt_.step = t;
    if (cfg_.lr_physics > 0.0) {
        project_constraints(model_);
        if (cfg_.fix_inertia_scale) normalize_inertia_trace(model_.physics_param(kInertiaLower).value);
    }
    bool finite = true;
    for (const Parameter* p : params) finite = finite && p->value.all_finite();
    if (!finite) fail("parameter update produced non-finite values");

    epoch_sum_.data += b.data;
    epoch_sum_.acc += b.acc;
    epoch_sum_.gyro += b.gyro;
    epoch_sum_.dynamics += b.dynamics;
    epoch_sum_.weight_decay += b.weight_decay;
    epoch_sum_.total += b.total;
    ++epoch_count_;
    if (cfg_.log_every > 0 && t % cfg_.log_every == 0) step_log_.push_back({t, b});

    if (++step_in_epoch_ == steps_per_epoch()) {
        step_in_epoch_ = 0;
        ++epoch_;
    }
    return b;
}

EpochLog Trainer::run_epoch() {
    const auto start = std::chrono::steady_clock::now();
    const std::size_t current = epoch_;
    while (!done() && epoch_ == current) step();
    EpochLog log;
    log.epoch = current + 1;
    const double inv = epoch_count_ > 0 ? 1.0 / static_cast<double>(epoch_count_) : 0.0;
    log.mean = {epoch_sum_.data * inv,         epoch_sum_.acc * inv,          epoch_sum_.gyro * inv,
                epoch_sum_.dynamics * inv,     epoch_sum_.weight_decay * inv, epoch_sum_.total * inv};
    log.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    epoch_sum_ = {};
    epoch_count_ = 0;
    return log;
}

std::vector<EpochLog> Trainer::run(const std::function<void(const EpochLog&)>& on_epoch) {
    std::vector<EpochLog> logs;
    while (!done()) {
        logs.push_back(run_epoch());
        if (on_epoch) on_epoch(logs.back());
    }
    return logs;
}

}  // namespace tepinn
