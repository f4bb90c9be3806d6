#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tepinn/autodiff/tensor.hpp"

namespace tepinn::ad {

/// Trainable tensor that outlives tapes. Gradients from `Tape::backward`
/// accumulate into `grad` until the caller zeroes it.
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;

    Parameter() = default;
    Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

    void zero_grad() { grad = Tensor(value.shape()); }
};

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
class Var {
public:
    Var() = default;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    Tape& tape() const { return *tape_; }
    std::size_t id() const { return id_; }
    const Tensor& value() const;
    const Tensor& grad() const;
    const Shape& shape() const { return value().shape(); }
    std::size_t rows() const { return value().rows(); }
    std::size_t cols() const { return value().cols(); }
    double item() const { return value().item(); }

private:
    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

/// Reverse-mode tape. Nodes are appended in evaluation order, so a reverse
/// sweep over the node list is a valid reverse topological order.
class Tape {
public:
    using BackwardFn = std::function<void(Tape&, std::size_t self)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Tensor value);
    /// Differentiable input; its gradient is readable after backward.
    Var leaf(Tensor value);
    /// Leaf bound to a persistent parameter; backward adds into `p.grad`.
    Var param(Parameter& p);

    /// Appends an op result. `backward` may be empty for non-differentiable ops.
    Var record(std::string_view op, Tensor value, std::vector<std::size_t> parents, BackwardFn backward);

    /// Reverse sweep from a scalar loss (shape [1]). Throws NonScalarLoss.
    void backward(Var loss);

    const Tensor& value(std::size_t id) const { return nodes_[id].value; }
    bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
    /// Gradient buffer of a node, allocated as zeros on first access.
    Tensor& grad(std::size_t id);
    const Tensor& grad_or_empty(std::size_t id) const { return nodes_[id].grad; }
    std::size_t size() const { return nodes_.size(); }

    /// Raise NonFinite when an op produces NaN/Inf.
    void set_check_finite(bool on) { check_finite_ = on; }

private:
    struct Node {
        std::string_view op;
        Tensor value;
        Tensor grad;
        std::vector<std::size_t> parents;
        BackwardFn backward;
        Parameter* param = nullptr;
        bool requires_grad = false;
    };

    std::vector<Node> nodes_;
    bool check_finite_ = true;
};

}  // namespace tepinn::ad
