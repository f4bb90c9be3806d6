#pragma once

// Differentiable quaternion and 3-vector helpers over row-stacked tensors:
// quaternions as K×4 (w, x, y, z) and vectors as K×3.

#include <vector>

#include "tepinn/autodiff/ops.hpp"
#include "tepinn/quat.hpp"

namespace tepinn::qops {

using ad::Var;

/// Unit-normalizes each row. Throws ZeroNorm if a row norm is below 1e-12.
Var normalize_rows(Var q);

/// Row-wise to_euler → zero yaw → from_euler. Input rows must be unit.
Var attitude_correct_rows(Var q);

/// Row-wise gravity (0, 0, -g) rotated into the body frame.
Var gravity_in_body_rows(Var q, double g);

/// Row-wise vector part of conj(p) ⊗ q.
Var conj_mul_vec_rows(Var p, Var q);

/// Row-wise a × b.
Var cross_rows(Var a, Var b);

/// Row-wise squared norm, K×n → K×1.
Var squared_norm_rows(Var a);

ad::Tensor to_tensor(const std::vector<Quaternion>& qs);
ad::Tensor to_tensor(const std::vector<Vec3>& vs);
Quaternion row_quaternion(const ad::Tensor& t, std::size_t row);

}  // namespace tepinn::qops
