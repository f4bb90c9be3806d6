#pragma once

// Differentiable tensor operations. Each op records itself on the tape of its
// first argument. Binary elementwise ops accept a right operand of the same
// shape, a row vector (1×n or [n]), a column vector (m×1) or a scalar [1].

#include <span>
#include <vector>

#include "tepinn/autodiff/tape.hpp"

namespace tepinn::ad {

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
/// Bias add; alias of add with a row-vector right operand.
Var broadcast_add(Var a, Var row);

Var neg(Var a);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var div_scalar(Var a, double s);

Var matmul(Var a, Var b);
Var transpose(Var a);
Var reshape(Var a, Shape shape);
/// axis 0 stacks rows, axis 1 stacks columns.
Var concat(std::span<const Var> parts, int axis);
Var slice_rows(Var a, std::size_t begin, std::size_t end);
Var slice_cols(Var a, std::size_t begin, std::size_t end);

Var sum(Var a);
Var mean(Var a);
/// Per-row sum, m×n → m×1.
Var sum_cols(Var a);

Var relu(Var a);
Var tanh(Var a);
Var exp(Var a);
Var sqrt(Var a);
Var square(Var a);
Var sin(Var a);
Var cos(Var a);
/// Derivative is capped where |x| → 1.
Var asin(Var a);
Var atan2(Var y, Var x);
/// Gradient passes through only inside [lo, hi].
Var clamp(Var a, double lo, double hi);

Var softmax_rows(Var a);
/// Per-row standardization without affine parameters.
Var layer_norm_rows(Var a, double eps = 1e-5);

}  // namespace tepinn::ad
