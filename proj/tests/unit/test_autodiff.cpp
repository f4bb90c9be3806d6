#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "tepinn/autodiff/grad_check.hpp"
#include "tepinn/autodiff/ops.hpp"
#include "tepinn/error.hpp"

namespace tepinn::ad {
namespace {

Tensor uniform(Shape shape, double lo, double hi, std::mt19937_64& rng) {
    Tensor t(std::move(shape));
    std::uniform_real_distribution<double> u(lo, hi);
    for (double& v : t.data()) v = u(rng);
    return t;
}

// Values bounded away from zero, random sign; keeps relu/div/clamp off their kinks.
Tensor away_from_zero(Shape shape, std::mt19937_64& rng) {
    Tensor t(std::move(shape));
    std::uniform_real_distribution<double> mag(0.2, 1.5);
    std::bernoulli_distribution sign(0.5);
    for (double& v : t.data()) v = sign(rng) ? mag(rng) : -mag(rng);
    return t;
}

// Scalarize with a fixed random weighting so every output element matters.
Var weighted_sum(Var y, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Var w = y.tape().constant(uniform(y.shape(), -1.0, 1.0, rng));
    return sum(mul(y, w));
}

using Unary = std::function<Var(Var)>;
using Binary = std::function<Var(Var, Var)>;

double check_unary(const Unary& op, Tensor x0) {
    Parameter x("x", std::move(x0));
    Parameter* ps[] = {&x};
    return grad_check([&](Tape& t) { return weighted_sum(op(t.param(x)), 99); }, ps).max_rel_error;
}

double check_binary(const Binary& op, Tensor a0, Tensor b0) {
    Parameter a("a", std::move(a0)), b("b", std::move(b0));
    Parameter* ps[] = {&a, &b};
    return grad_check([&](Tape& t) { return weighted_sum(op(t.param(a), t.param(b)), 98); }, ps).max_rel_error;
}

constexpr double kTol = 1e-4;

TEST(Autodiff, UnaryOpsMatchFiniteDifferences) {
    std::mt19937_64 rng(1);
    struct Case {
        const char* name;
        Unary op;
        double lo, hi;
        bool avoid_zero;
    };
    const std::vector<Case> cases = {
        {"neg", [](Var a) { return neg(a); }, -2, 2, false},
        {"scale", [](Var a) { return scale(a, -1.7); }, -2, 2, false},
        {"add_scalar", [](Var a) { return add_scalar(a, 0.3); }, -2, 2, false},
        {"div_scalar", [](Var a) { return div_scalar(a, 3.0); }, -2, 2, false},
        {"transpose", [](Var a) { return transpose(a); }, -2, 2, false},
        {"reshape", [](Var a) { return reshape(a, {2, 6}); }, -2, 2, false},
        {"slice_rows", [](Var a) { return slice_rows(a, 1, 3); }, -2, 2, false},
        {"slice_cols", [](Var a) { return slice_cols(a, 1, 3); }, -2, 2, false},
        {"sum", [](Var a) { return sum(a); }, -2, 2, false},
        {"mean", [](Var a) { return mean(a); }, -2, 2, false},
        {"sum_cols", [](Var a) { return sum_cols(a); }, -2, 2, false},
        {"relu", [](Var a) { return relu(a); }, 0, 0, true},
        {"tanh", [](Var a) { return tanh(a); }, -2, 2, false},
        {"exp", [](Var a) { return exp(a); }, -2, 2, false},
        {"sqrt", [](Var a) { return sqrt(a); }, 0.2, 3, false},
        {"square", [](Var a) { return square(a); }, -2, 2, false},
        {"sin", [](Var a) { return sin(a); }, -3, 3, false},
        {"cos", [](Var a) { return cos(a); }, -3, 3, false},
        {"asin", [](Var a) { return asin(a); }, -0.9, 0.9, false},
        {"clamp", [](Var a) { return clamp(a, -0.1, 0.1); }, 0, 0, true},
        {"softmax_rows", [](Var a) { return softmax_rows(a); }, -2, 2, false},
        {"layer_norm_rows", [](Var a) { return layer_norm_rows(a); }, -2, 2, false},
    };
    for (const Case& c : cases) {
        for (int trial = 0; trial < 5; ++trial) {
            Tensor x = c.avoid_zero ? away_from_zero({4, 3}, rng) : uniform({4, 3}, c.lo, c.hi, rng);
            EXPECT_LT(check_unary(c.op, std::move(x)), kTol) << c.name << " trial " << trial;
        }
    }
}

TEST(Autodiff, BinaryOpsMatchFiniteDifferencesWithBroadcasting) {
    std::mt19937_64 rng(2);
    struct Case {
        const char* name;
        Binary op;
        bool positive_rhs;
    };
    const std::vector<Case> cases = {
        {"add", [](Var a, Var b) { return add(a, b); }, false},
        {"sub", [](Var a, Var b) { return sub(a, b); }, false},
        {"mul", [](Var a, Var b) { return mul(a, b); }, false},
        {"div", [](Var a, Var b) { return div(a, b); }, true},
    };
    const Shape rhs_shapes[] = {{4, 3}, {1, 3}, {3}, {4, 1}, {1}};
    for (const Case& c : cases) {
        for (const Shape& rs : rhs_shapes) {
            Tensor a = uniform({4, 3}, -2, 2, rng);
            Tensor b = c.positive_rhs ? uniform(rs, 0.5, 2.0, rng) : uniform(rs, -2, 2, rng);
            EXPECT_LT(check_binary(c.op, std::move(a), std::move(b)), kTol) << c.name << " rhs " << shape_string(rs);
        }
    }
    EXPECT_LT(check_binary([](Var y, Var x) { return atan2(y, x); }, uniform({4, 3}, -2, 2, rng),
                           away_from_zero({4, 3}, rng)),
              kTol);
    Tensor bias = uniform({3}, -1, 1, rng);
    EXPECT_LT(check_binary([](Var a, Var b) { return broadcast_add(a, b); }, uniform({4, 3}, -1, 1, rng), bias), kTol);
}

TEST(Autodiff, MatmulAndConcatMatchFiniteDifferences) {
    std::mt19937_64 rng(3);
    EXPECT_LT(check_binary([](Var a, Var b) { return matmul(a, b); }, uniform({5, 4}, -1, 1, rng),
                           uniform({4, 3}, -1, 1, rng)),
              kTol);
    EXPECT_LT(check_binary([](Var a, Var b) { return matmul(a, transpose(b)); }, uniform({5, 4}, -1, 1, rng),
                           uniform({6, 4}, -1, 1, rng)),
              kTol);
    EXPECT_LT(check_binary(
                  [](Var a, Var b) {
                      const Var parts[] = {a, b, a};
                      return concat(parts, 0);
                  },
                  uniform({2, 3}, -1, 1, rng), uniform({4, 3}, -1, 1, rng)),
              kTol);
    EXPECT_LT(check_binary(
                  [](Var a, Var b) {
                      const Var parts[] = {b, a};
                      return concat(parts, 1);
                  },
                  uniform({3, 2}, -1, 1, rng), uniform({3, 5}, -1, 1, rng)),
              kTol);
}

TEST(Autodiff, SoftmaxOfZerosIsUniform) {
    Tape t;
    Var y = softmax_rows(t.constant(Tensor({3, 4})));
    for (double v : y.value().data()) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(Autodiff, SoftmaxIsShiftInvariantAndStable) {
    Tape t;
    Var y1 = softmax_rows(t.constant(Tensor::matrix(1, 3, {1000.0, 1001.0, 1002.0})));
    Var y2 = softmax_rows(t.constant(Tensor::matrix(1, 3, {0.0, 1.0, 2.0})));
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(y1.value()[i], y2.value()[i], 1e-15);
}

TEST(Autodiff, SumOfSoftmaxHasZeroGradient) {
    std::mt19937_64 rng(4);
    Tape t;
    Var x = t.leaf(uniform({3, 5}, -2, 2, rng));
    t.backward(sum(softmax_rows(x)));
    for (double g : x.grad().data()) EXPECT_NEAR(g, 0.0, 1e-14);
}

TEST(Autodiff, LayerNormOfConstantRowIsZero) {
    Tape t;
    Var y = layer_norm_rows(t.constant(Tensor({2, 6}, 3.7)));
    for (double v : y.value().data()) EXPECT_EQ(v, 0.0);
}

TEST(Autodiff, LayerNormStandardizesRows) {
    std::mt19937_64 rng(5);
    Tape t;
    Var y = layer_norm_rows(t.constant(uniform({3, 16}, -4, 4, rng)), 0.0);
    for (std::size_t r = 0; r < 3; ++r) {
        double m = 0.0, v = 0.0;
        for (std::size_t c = 0; c < 16; ++c) m += y.value()(r, c) / 16.0;
        for (std::size_t c = 0; c < 16; ++c) v += std::pow(y.value()(r, c) - m, 2) / 16.0;
        EXPECT_NEAR(m, 0.0, 1e-14);
        EXPECT_NEAR(v, 1.0, 1e-12);
    }
}

TEST(Autodiff, ProductRuleExact) {
    Tape t;
    Var x = t.leaf(Tensor::scalar(3.0));
    Var y = t.leaf(Tensor::scalar(-2.5));
    t.backward(mul(x, y));
    EXPECT_EQ(x.grad().item(), -2.5);
    EXPECT_EQ(y.grad().item(), 3.0);
}

TEST(Autodiff, GradientsAccumulateOverReuse) {
    Tape t;
    Var x = t.leaf(Tensor::scalar(2.0));
    Var y = add(mul(x, x), x);  // x² + x
    t.backward(y);
    EXPECT_EQ(x.grad().item(), 5.0);
}

TEST(Autodiff, TwoLayerNetworkGradCheck) {
    std::mt19937_64 rng(6);
    Parameter w1("w1", uniform({4, 8}, -0.5, 0.5, rng)), b1("b1", uniform({8}, -0.1, 0.1, rng));
    Parameter w2("w2", uniform({8, 2}, -0.5, 0.5, rng)), b2("b2", uniform({2}, -0.1, 0.1, rng));
    const Tensor input = uniform({5, 4}, -1, 1, rng);
    const Tensor target = uniform({5, 2}, -1, 1, rng);
    Parameter* ps[] = {&w1, &b1, &w2, &b2};
    auto build = [&](Tape& t) {
        Var h = tanh(broadcast_add(matmul(t.constant(input), t.param(w1)), t.param(b1)));
        Var y = broadcast_add(matmul(h, t.param(w2)), t.param(b2));
        return mean(square(sub(y, t.constant(target))));
    };
    const GradCheckResult r = grad_check(build, ps);
    EXPECT_LT(r.max_rel_error, kTol) << r.worst_param << "[" << r.worst_index << "]";
}

TEST(Autodiff, BackwardIsDeterministic) {
    std::mt19937_64 rng(7);
    Parameter w("w", uniform({6, 6}, -1, 1, rng));
    const Tensor x = uniform({4, 6}, -1, 1, rng);
    auto run = [&] {
        w.zero_grad();
        Tape t;
        Var y = softmax_rows(layer_norm_rows(matmul(t.constant(x), t.param(w))));
        t.backward(sum(square(y)));
        return w.grad;
    };
    EXPECT_EQ(run(), run());
}

TEST(Autodiff, ParameterGradientsAccumulateAcrossTapes) {
    Parameter p("p", Tensor::scalar(1.5));
    for (int i = 0; i < 2; ++i) {
        Tape t;
        t.backward(square(t.param(p)));
    }
    EXPECT_EQ(p.grad.item(), 6.0);
}

TEST(Autodiff, NonScalarLossRaises) {
    Tape t;
    Var x = t.leaf(Tensor({2, 2}, 1.0));
    try {
        t.backward(x);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NonScalarLoss);
    }
}

TEST(Autodiff, ShapeMismatchRaises) {
    Tape t;
    Var a = t.constant(Tensor({2, 3}));
    Var b = t.constant(Tensor({3, 2}));
    try {
        add(a, b);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::ShapeMismatch);
    }
    EXPECT_THROW(matmul(a, a), Error);
}

TEST(Autodiff, NonFiniteValuesAreRejected) {
    Tape t;
    Var x = t.constant(Tensor::scalar(-1.0));
    try {
        sqrt(x);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NonFinite);
    }
}

TEST(Autodiff, AsinDerivativeCappedAtBoundary) {
    Tape t;
    Var x = t.leaf(Tensor::scalar(1.0));
    t.backward(asin(x));
    EXPECT_TRUE(std::isfinite(x.grad().item()));
}

}  // namespace
}  // namespace tepinn::ad
