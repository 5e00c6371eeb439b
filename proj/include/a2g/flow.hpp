#pragma once

#include <functional>

#include "a2g/tensor.hpp"

namespace a2g {

// Sinusoidal features of a scalar flow time in [0,1]; shared by both
// denoising networks. dim must be even.
Tensor sinusoidal_time_embed(double t, int dim);

using VectorField = std::function<Tensor(const Tensor& z, double flow_t)>;

// z^(n+1) = z^(n) + (1/N) * field(z^(n), n/N), n = 0..N-1.
// Throws a divergence error on non-finite intermediates.
Tensor euler_integrate(const VectorField& field, Tensor z0, int n_steps);

}  // namespace a2g
