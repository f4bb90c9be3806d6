#include "tepinn/autodiff/tape.hpp"

#include "tepinn/error.hpp"
#include "tepinn/kernels/kernels.hpp"

namespace tepinn::ad {

const Tensor& Var::value() const { return tape_->value(id_); }
const Tensor& Var::grad() const { return tape_->grad_or_empty(id_); }

Var Tape::constant(Tensor value) { return record("constant", std::move(value), {}, {}); }

Var Tape::leaf(Tensor value) {
    Var v = record("leaf", std::move(value), {}, {});
    nodes_[v.id()].requires_grad = true;
    return v;
}

Var Tape::param(Parameter& p) {
    Var v = leaf(p.value);
    nodes_[v.id()].param = &p;
    nodes_[v.id()].op = "param";
    return v;
}

Var Tape::record(std::string_view op, Tensor value, std::vector<std::size_t> parents, BackwardFn backward) {
    if (check_finite_ && !value.all_finite()) {
        throw Error(ErrorKind::NonFinite, "op '" + std::string(op) + "' produced a non-finite value");
    }
    Node node;
    node.op = op;
    node.value = std::move(value);
    for (std::size_t p : parents) node.requires_grad = node.requires_grad || nodes_[p].requires_grad;
    node.parents = std::move(parents);
    if (node.requires_grad) node.backward = std::move(backward);
    nodes_.push_back(std::move(node));
    return Var(this, nodes_.size() - 1);
}

Tensor& Tape::grad(std::size_t id) {
    Node& n = nodes_[id];
    if (n.grad.size() != n.value.size()) n.grad = Tensor(n.value.shape());
    return n.grad;
}

void Tape::backward(Var loss) {
    if (loss.value().size() != 1) {
        throw Error(ErrorKind::NonScalarLoss, "loss has shape " + shape_string(loss.shape()));
    }
    for (Node& n : nodes_) n.grad = Tensor();
    grad(loss.id())[0] = 1.0;
    for (std::size_t i = loss.id() + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (!n.requires_grad || n.grad.size() == 0) continue;
        if (n.backward) n.backward(*this, i);
        if (n.param != nullptr) {
            Tensor& pg = n.param->grad;
            if (pg.shape() != n.value.shape()) pg = Tensor(n.value.shape());
            kernels::active().axpy(1.0, n.grad.ptr(), pg.ptr(), pg.size());
        }
    }
}

}  // namespace tepinn::ad
