#pragma once

#include <cstdint>
#include <vector>

#include "a2g/tensor.hpp"

namespace a2g {

// One recorded episode. Actions are stored as rows [dx, dy, grip01]; there is
// always one more observation than action.
struct Trajectory {
    std::vector<Tensor> images;    // T+1 frames [G x G]
    std::vector<Tensor> proprios;  // T+1 rows [proprio_dim]
    Tensor actions;                // [T x action_dim]
    Tensor goal_image;             // [G x G]
    uint64_t seed = 0;

    int length() const { return static_cast<int>(images.size()); }  // observation count
    void validate() const;
};

}  // namespace a2g
