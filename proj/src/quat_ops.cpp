#include "tepinn/quat_ops.hpp"

#include <array>
#include <cmath>

#include "tepinn/error.hpp"

namespace tepinn::qops {

namespace {

Var col(Var a, std::size_t j) { return ad::slice_cols(a, j, j + 1); }

Var cat_cols(std::initializer_list<Var> parts) {
    const std::vector<Var> v(parts);
    return ad::concat(v, 1);
}

}  // namespace

Var normalize_rows(Var q) {
    const ad::Tensor& v = q.value();
    for (std::size_t r = 0; r < v.rows(); ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < v.cols(); ++c) s += v(r, c) * v(r, c);
        if (!(std::sqrt(s) >= 1e-12)) {
            throw Error(ErrorKind::ZeroNorm, "quaternion head produced a zero vector at row " + std::to_string(r));
        }
    }
    return ad::div(q, ad::sqrt(squared_norm_rows(q)));
}

Var attitude_correct_rows(Var q) {
    const Var w = col(q, 0), x = col(q, 1), y = col(q, 2), z = col(q, 3);
    const Var roll = ad::atan2(ad::scale(ad::add(ad::mul(w, x), ad::mul(y, z)), 2.0),
                               ad::add_scalar(ad::scale(ad::add(ad::square(x), ad::square(y)), -2.0), 1.0));
    const Var pitch = ad::asin(ad::clamp(ad::scale(ad::sub(ad::mul(w, y), ad::mul(z, x)), 2.0), -1.0, 1.0));
    const Var half_roll = ad::scale(roll, 0.5);
    const Var half_pitch = ad::scale(pitch, 0.5);
    const Var cr = ad::cos(half_roll), sr = ad::sin(half_roll);
    const Var cp = ad::cos(half_pitch), sp = ad::sin(half_pitch);
    return cat_cols({ad::mul(cr, cp), ad::mul(sr, cp), ad::mul(cr, sp), ad::neg(ad::mul(sr, sp))});
}

Var gravity_in_body_rows(Var q, double g) {
    // third row of the body→world rotation matrix, scaled by -g
    const Var w = col(q, 0), x = col(q, 1), y = col(q, 2), z = col(q, 3);
    const Var gx = ad::scale(ad::sub(ad::mul(x, z), ad::mul(w, y)), -2.0 * g);
    const Var gy = ad::scale(ad::add(ad::mul(y, z), ad::mul(w, x)), -2.0 * g);
    const Var gz = ad::scale(ad::sub(ad::add(ad::square(w), ad::square(z)), ad::add(ad::square(x), ad::square(y))), -g);
    return cat_cols({gx, gy, gz});
}

Var conj_mul_vec_rows(Var p, Var q) {
    // vec(conj(p) ⊗ q) = p_w q_v − q_w p_v − p_v × q_v
    const Var pw = col(p, 0);
    const Var pv = ad::slice_cols(p, 1, 4);
    const Var qw = col(q, 0);
    const Var qv = ad::slice_cols(q, 1, 4);
    return ad::sub(ad::sub(ad::mul(qv, pw), ad::mul(pv, qw)), cross_rows(pv, qv));
}

Var cross_rows(Var a, Var b) {
    const Var ax = col(a, 0), ay = col(a, 1), az = col(a, 2);
    const Var bx = col(b, 0), by = col(b, 1), bz = col(b, 2);
    return cat_cols({ad::sub(ad::mul(ay, bz), ad::mul(az, by)), ad::sub(ad::mul(az, bx), ad::mul(ax, bz)),
                     ad::sub(ad::mul(ax, by), ad::mul(ay, bx))});
}

Var squared_norm_rows(Var a) { return ad::sum_cols(ad::square(a)); }

ad::Tensor to_tensor(const std::vector<Quaternion>& qs) {
    ad::Tensor t({qs.size(), 4});
    for (std::size_t i = 0; i < qs.size(); ++i) {
        t(i, 0) = qs[i].w;
        t(i, 1) = qs[i].x;
        t(i, 2) = qs[i].y;
        t(i, 3) = qs[i].z;
    }
    return t;
}

ad::Tensor to_tensor(const std::vector<Vec3>& vs) {
    ad::Tensor t({vs.size(), 3});
    for (std::size_t i = 0; i < vs.size(); ++i) {
        t(i, 0) = vs[i].x;
        t(i, 1) = vs[i].y;
        t(i, 2) = vs[i].z;
    }
    return t;
}

Quaternion row_quaternion(const ad::Tensor& t, std::size_t row) {
    return {t(row, 0), t(row, 1), t(row, 2), t(row, 3)};
}

}  // namespace tepinn::qops
