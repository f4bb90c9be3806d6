#include "tepinn/autodiff/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace tepinn::ad {

namespace {

double evaluate(const LossBuilder& build) {
    Tape tape;
    return build(tape).item();
}

}  // namespace

GradCheckResult grad_check(const LossBuilder& build, std::span<Parameter* const> params, double eps, double atol) {
    std::vector<Tensor> saved_grads;
    for (Parameter* p : params) {
        saved_grads.push_back(p->grad);
        p->zero_grad();
    }
    {
        Tape tape;
        tape.backward(build(tape));
    }

    GradCheckResult result;
    for (Parameter* p : params) {
        for (std::size_t i = 0; i < p->value.size(); ++i) {
            const double original = p->value[i];
            p->value[i] = original + eps;
            const double up = evaluate(build);
            p->value[i] = original - eps;
            const double down = evaluate(build);
            p->value[i] = original;

            const double numeric = (up - down) / (2.0 * eps);
            const double analytic = p->grad[i];
            const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
            const double diff = std::abs(analytic - numeric);
            const double rel = diff <= atol ? 0.0 : diff / denom;
            if (rel > result.max_rel_error || result.worst_param.empty()) {
                if (rel >= result.max_rel_error) {
                    result = {rel, p->name, i, analytic, numeric};
                }
            }
        }
    }
    for (std::size_t k = 0; k < params.size(); ++k) params[k]->grad = std::move(saved_grads[k]);
    return result;
}

}  // namespace tepinn::ad
