#include "a2g/flow.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace a2g {

Tensor sinusoidal_time_embed(double t, int dim) {
    if (dim < 2 || dim % 2 != 0) {
        throw std::invalid_argument("sinusoidal_time_embed: dim must be even and >= 2");
    }
    const int half = dim / 2;
    Tensor e = Tensor::zeros({dim});
    for (int k = 0; k < half; ++k) {
        const double expo = half > 1 ? static_cast<double>(k) / (half - 1) : 0.0;
        const double omega = std::pow(1000.0, expo);
        e.data[static_cast<size_t>(2 * k)] = std::sin(omega * t);
        e.data[static_cast<size_t>(2 * k + 1)] = std::cos(omega * t);
    }
    return e;
}

Tensor euler_integrate(const VectorField& field, Tensor z0, int n_steps) {
    if (n_steps < 1) {
        throw std::invalid_argument("euler_integrate: n_steps must be >= 1");
    }
    const double inv_n = 1.0 / static_cast<double>(n_steps);
    Tensor z = std::move(z0);
    for (int n = 0; n < n_steps; ++n) {
        const double flow_t = static_cast<double>(n) * inv_n;
        const Tensor v = field(z, flow_t);
        if (!v.same_shape(z)) {
            throw_shape_error("euler_integrate: field output", v, z);
        }
        for (size_t i = 0; i < z.data.size(); ++i) {
            z.data[i] += inv_n * v.data[i];
        }
        if (!z.all_finite()) {
            throw std::runtime_error("euler_integrate: diverged (non-finite state) at step " +
                                     std::to_string(n));
        }
    }
    return z;
}

}  // namespace a2g
