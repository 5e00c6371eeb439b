#include "a2g/gradcheck.hpp"

#include <cmath>
#include <stdexcept>

#include "a2g/rng.hpp"

namespace a2g {

namespace {

double eval_value(const TapeFn& f, const std::vector<Tensor>& params) {
    Tape tape;
    std::vector<Var> leaves;
    leaves.reserve(params.size());
    for (const Tensor& p : params) {
        leaves.push_back(tape.leaf(p, false));
    }
    const Tensor& y = tape.val(f(tape, leaves));
    if (y.numel() != 1) {
        throw std::invalid_argument("finite_diff_check: f must be scalar-valued");
    }
    if (!std::isfinite(y.data[0])) {
        throw std::runtime_error("finite_diff_check: non-finite f evaluation");
    }
    return y.data[0];
}

}  // namespace

double finite_diff_check(const TapeFn& f, const std::vector<Tensor>& params, double h,
                         int max_coords_per_param, uint64_t coord_seed) {
    if (h <= 0.0) {
        throw std::invalid_argument("finite_diff_check: h must be > 0");
    }
    // analytic gradients
    Tape tape;
    std::vector<Var> leaves;
    leaves.reserve(params.size());
    for (const Tensor& p : params) {
        leaves.push_back(tape.leaf(p, true));
    }
    Var y = f(tape, leaves);
    tape.backward(y);
    std::vector<Tensor> analytic;
    analytic.reserve(params.size());
    for (Var v : leaves) {
        analytic.push_back(tape.grad(v));
    }

    Rng rng(coord_seed);
    double max_rel = 0.0;
    std::vector<Tensor> work = params;
    for (size_t pi = 0; pi < params.size(); ++pi) {
        const int64_t n = params[pi].numel();
        std::vector<int64_t> coords;
        if (max_coords_per_param > 0 && n > max_coords_per_param) {
            for (int c = 0; c < max_coords_per_param; ++c) {
                coords.push_back(static_cast<int64_t>(rng.next_u64() % static_cast<uint64_t>(n)));
            }
        } else {
            coords.resize(static_cast<size_t>(n));
            for (int64_t c = 0; c < n; ++c) {
                coords[static_cast<size_t>(c)] = c;
            }
        }
        for (int64_t c : coords) {
            const double orig = work[pi][c];
            work[pi][c] = orig + h;
            const double fp = eval_value(f, work);
            work[pi][c] = orig - h;
            const double fm = eval_value(f, work);
            work[pi][c] = orig;
            const double fd = (fp - fm) / (2.0 * h);
            const double ad = analytic[pi][c];
            const double denom = std::max({std::fabs(ad), std::fabs(fd), 1e-4});
            max_rel = std::max(max_rel, std::fabs(ad - fd) / denom);
        }
    }
    return max_rel;
}

}  // namespace a2g
