#pragma once

#include <cstdint>
#include <vector>

#include "a2g/tensor.hpp"

namespace a2g {

// Adaptive-moment optimizer state. Moment tensors are allocated lazily on the
// first step and always shape-match their parameters.
struct OptimizerState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    int64_t step = 0;
    std::vector<Tensor> m;
    std::vector<Tensor> v;
};

// One update over an aligned (params, grads) list. Deterministic; throws on
// shape mismatch or non-finite gradients.
void optimizer_step(std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
                    OptimizerState& state);

}  // namespace a2g
