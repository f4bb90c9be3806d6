#include "tepinn/losses.hpp"

#include "tepinn/error.hpp"
#include "tepinn/quat_ops.hpp"

namespace tepinn {

using ad::Tensor;
using ad::Var;

namespace {

Tensor vec_row(Vec3 v) { return Tensor({1, 3}, {v.x, v.y, v.z}); }
Tensor mat_tensor(const Mat3& m) { return Tensor({3, 3}, std::vector<double>(m.m.begin(), m.m.end())); }

void require_rows(Var a, Var b, const char* what) {
    if (a.rows() != b.rows()) {
        throw Error(ErrorKind::LengthMismatch, std::string(what) + ": " + std::to_string(a.rows()) + " vs " +
                                                   std::to_string(b.rows()) + " samples");
    }
}

void require_cols(Var a, std::size_t cols, const char* what) {
    if (a.cols() != cols) {
        throw Error(ErrorKind::ShapeMismatch, std::string(what) + " needs " + std::to_string(cols) + " columns, got " +
                                                  ad::shape_string(a.shape()));
    }
}

// (x[i+1] − x[i−1]) / 2dt for interior rows
Var central_difference(Var x, double dt) {
    const std::size_t n = x.rows();
    return ad::scale(ad::sub(ad::slice_rows(x, 2, n), ad::slice_rows(x, 0, n - 2)), 1.0 / (2.0 * dt));
}

Var mean_squared_norm(Var residual) { return ad::div_scalar(ad::sum(ad::square(residual)), double(residual.rows())); }

}  // namespace

void LossWeights::validate() const {
    if (!(acc >= 0.0 && gyro >= 0.0 && dynamics >= 0.0 && weight_decay >= 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "loss weights must be nonnegative");
    }
}

PhysicsVars constant_physics(ad::Tape& tape, const SensorCalibration& cal, const InertiaFactor& inertia) {
    return {tape.constant(vec_row(cal.gyro_bias)), tape.constant(vec_row(cal.accel_bias)),
            tape.constant(mat_tensor(cal.gyro_scale)), tape.constant(mat_tensor(cal.accel_scale)),
            tape.constant(mat_tensor(inertia.lower))};
}

Var correct_gyro_rows(Var raw, const PhysicsVars& phys) {
    require_cols(raw, 3, "gyro rows");
    return ad::sub(ad::sub(raw, phys.gyro_bias), ad::matmul(raw, ad::transpose(phys.gyro_scale)));
}

Var correct_accel_rows(Var raw, const PhysicsVars& phys) {
    require_cols(raw, 3, "accel rows");
    return ad::sub(ad::sub(raw, phys.accel_bias), ad::matmul(raw, ad::transpose(phys.accel_scale)));
}

Var inertia_tensor(Var lower) {
    const Tensor mask({3, 3}, {1, 0, 0, 1, 1, 0, 1, 1, 1});
    const Var l = ad::mul(lower, lower.tape().constant(mask));
    return ad::matmul(l, ad::transpose(l));
}

Var data_loss(Var q_pred, std::span<const Quaternion> q_true) {
    require_cols(q_pred, 4, "data_loss prediction");
    if (q_pred.rows() != q_true.size() || q_true.empty()) {
        throw Error(ErrorKind::LengthMismatch, "data_loss: " + std::to_string(q_pred.rows()) + " predictions vs " +
                                                   std::to_string(q_true.size()) + " truth samples");
    }
    Tensor aligned({q_true.size(), 4});
    for (std::size_t i = 0; i < q_true.size(); ++i) {
        const Quaternion q = sign_align(q_true[i], qops::row_quaternion(q_pred.value(), i));
        aligned(i, 0) = q.w;
        aligned(i, 1) = q.x;
        aligned(i, 2) = q.y;
        aligned(i, 3) = q.z;
    }
    return ad::mean(ad::square(ad::sub(q_pred, q_pred.tape().constant(std::move(aligned)))));
}

Var acc_loss(Var q_pred, Var accel_measured, const PhysicsVars& phys) {
    require_cols(q_pred, 4, "acc_loss prediction");
    require_rows(q_pred, accel_measured, "acc_loss");
    const Var residual = ad::sub(qops::gravity_in_body_rows(q_pred, kGravity), correct_accel_rows(accel_measured, phys));
    return mean_squared_norm(residual);
}

Var gyro_loss(Var q_pred, Var gyro_measured, const PhysicsVars& phys, double dt) {
    require_cols(q_pred, 4, "gyro_loss prediction");
    require_rows(q_pred, gyro_measured, "gyro_loss");
    const std::size_t n = q_pred.rows();
    if (n < 3) throw Error(ErrorKind::TooShort, "gyro_loss needs at least 3 samples, got " + std::to_string(n));
    if (!(dt > 0.0)) throw Error(ErrorKind::InvalidArgument, "dt must be positive");
    const Var q_dot = central_difference(q_pred, dt);
    const Var implied = ad::scale(qops::conj_mul_vec_rows(ad::slice_rows(q_pred, 1, n - 1), q_dot), 2.0);
    const Var measured = correct_gyro_rows(ad::slice_rows(gyro_measured, 1, n - 1), phys);
    return mean_squared_norm(ad::sub(implied, measured));
}

Var dynamics_loss(Var omega, Var inertia_lower, Vec3 tau, double dt) {
    require_cols(omega, 3, "dynamics_loss omega");
    const std::size_t n = omega.rows();
    if (n < 3) throw Error(ErrorKind::TooShort, "dynamics_loss needs at least 3 samples, got " + std::to_string(n));
    if (!(dt > 0.0)) throw Error(ErrorKind::InvalidArgument, "dt must be positive");
    const Var inertia = inertia_tensor(inertia_lower);
    const Var w = ad::slice_rows(omega, 1, n - 1);
    const Var w_dot = central_difference(omega, dt);
    // row form: (I·v)ᵀ = vᵀ·Iᵀ
    const Var inertia_t = ad::transpose(inertia);
    const Var momentum = ad::matmul(w, inertia_t);
    Var residual = ad::add(ad::matmul(w_dot, inertia_t), qops::cross_rows(w, momentum));
    if (tau.x != 0.0 || tau.y != 0.0 || tau.z != 0.0) {
        residual = ad::sub(residual, omega.tape().constant(vec_row(tau)));
    }
    return mean_squared_norm(residual);
}

Var physics_loss(const LossTerms& terms, const LossWeights& w) {
    return ad::add(ad::add(ad::scale(terms.acc, w.acc), ad::scale(terms.gyro, w.gyro)),
                   ad::scale(terms.dynamics, w.dynamics));
}

Var total_loss(const LossTerms& terms, const LossWeights& w, LossBreakdown* breakdown) {
    w.validate();
    const Var total = ad::add(ad::add(terms.data, physics_loss(terms, w)), ad::scale(terms.weight_decay, w.weight_decay));
    if (breakdown != nullptr) {
        breakdown->data = terms.data.item();
        breakdown->acc = terms.acc.item();
        breakdown->gyro = terms.gyro.item();
        breakdown->dynamics = terms.dynamics.item();
        breakdown->weight_decay = terms.weight_decay.item();
        breakdown->total = total.item();
    }
    return total;
}

Var sum_of_squares(std::span<const Var> params) {
    if (params.empty()) throw Error(ErrorKind::InvalidArgument, "sum_of_squares of nothing");
    Var acc = ad::sum(ad::square(params[0]));
    for (std::size_t i = 1; i < params.size(); ++i) acc = ad::add(acc, ad::sum(ad::square(params[i])));
    return acc;
}

}  // namespace tepinn
