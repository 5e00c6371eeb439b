#include "a2g/optim.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace a2g {

void optimizer_step(std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
                    OptimizerState& state) {
    if (params.size() != grads.size()) {
        throw std::invalid_argument("optimizer_step: params/grads count mismatch");
    }
    if (state.m.empty()) {
        state.m.resize(params.size());
        state.v.resize(params.size());
        for (size_t i = 0; i < params.size(); ++i) {
            state.m[i] = Tensor::zeros(params[i]->shape);
            state.v[i] = Tensor::zeros(params[i]->shape);
        }
    }
    if (state.m.size() != params.size()) {
        throw std::invalid_argument("optimizer_step: state tracks a different parameter list");
    }
    for (size_t i = 0; i < params.size(); ++i) {
        if (!params[i]->same_shape(*grads[i])) {
            throw_shape_error("optimizer_step: param " + std::to_string(i), *params[i], *grads[i]);
        }
        if (!grads[i]->all_finite()) {
            throw std::runtime_error("optimizer_step: non-finite gradient for param " +
                                     std::to_string(i));
        }
    }
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i];
        const Tensor& g = *grads[i];
        Tensor& m = state.m[i];
        Tensor& v = state.v[i];
        for (size_t j = 0; j < p.data.size(); ++j) {
            m.data[j] = state.beta1 * m.data[j] + (1.0 - state.beta1) * g.data[j];
            v.data[j] = state.beta2 * v.data[j] + (1.0 - state.beta2) * g.data[j] * g.data[j];
            const double mhat = m.data[j] / bc1;
            const double vhat = v.data[j] / bc2;
            p.data[j] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
        }
    }
}

}  // namespace a2g
