#pragma once

#include <functional>
#include <vector>

#include "a2g/tape.hpp"
#include "a2g/tensor.hpp"

namespace a2g {

// Scalar function expressed as a tape program over leaf parameters.
using TapeFn = std::function<Var(Tape&, const std::vector<Var>&)>;

// Compares backward() gradients against central differences
// (f(p+h) - f(p-h)) / (2h) per coordinate and returns the max relative error,
// with the denominator floored at 1e-4 so zero-gradient coordinates compare on
// absolute terms. If max_coords_per_param > 0, a deterministic subset of
// coordinates is checked (large graphs). Throws on non-finite f evaluations.
double finite_diff_check(const TapeFn& f, const std::vector<Tensor>& params, double h,
                         int max_coords_per_param = -1, uint64_t coord_seed = 17);

}  // namespace a2g
