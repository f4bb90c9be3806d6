#pragma once

#include <functional>
#include <span>
#include <string>

#include "tepinn/autodiff/tape.hpp"

namespace tepinn::ad {

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::string worst_param;
    std::size_t worst_index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
};

/// Builds a scalar loss from the current parameter values on a fresh tape.
using LossBuilder = std::function<Var(Tape&)>;

/// Compares backpropagated gradients with central differences, one
/// coordinate at a time. Relative error uses max(|a|, |b|, 1e-8) as the
/// denominator. Coordinates whose absolute disagreement is within `atol`
/// (difference-quotient rounding noise, e.g. on exactly-zero gradients) count
/// as matching. Parameter values are restored before returning.
GradCheckResult grad_check(const LossBuilder& build, std::span<Parameter* const> params, double eps = 1e-5,
                           double atol = 1e-9);

}  // namespace tepinn::ad
