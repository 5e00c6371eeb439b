#include "a2g/adapter.hpp"

#include <cmath>
#include <stdexcept>

namespace a2g {

namespace {

void validate_adapter(const Tensor& base, const Tensor& up, const Tensor& down, int rank) {
    if (rank < 1) {
        throw std::invalid_argument("adapter: rank must be >= 1");
    }
    if (base.shape.size() != 2 || up.shape.size() != 2 || down.shape.size() != 2 ||
        up.shape[0] != base.shape[0] || up.shape[1] != rank || down.shape[0] != rank ||
        down.shape[1] != base.shape[1]) {
        throw std::invalid_argument("adapter: inconsistent shapes base=" + base.shape_str() +
                                    " up=" + up.shape_str() + " down=" + down.shape_str() +
                                    " rank=" + std::to_string(rank));
    }
}

}  // namespace

Tensor adapter_effective(const AdapterizedWeight& w) {
    validate_adapter(w.base, w.up, w.down, w.rank);
    Tensor eff = w.base;
    const int d_out = w.base.shape[0];
    const int d_in = w.base.shape[1];
    for (int i = 0; i < d_out; ++i) {
        for (int r = 0; r < w.rank; ++r) {
            const double u = w.up.at(i, r);
            if (u == 0.0) {
                continue;
            }
            for (int j = 0; j < d_in; ++j) {
                eff.at(i, j) += w.scale * u * w.down.at(r, j);
            }
        }
    }
    return eff;
}

Var adapter_effective(Tape& tape, Var base, Var up, Var down, double scale) {
    const Tensor& b = tape.val(base);
    const Tensor& u = tape.val(up);
    const Tensor& d = tape.val(down);
    validate_adapter(b, u, d, u.shape[1]);
    return tape.add(base, tape.scale(tape.matmul(up, down), scale));
}

AdapterizedLinear AdapterizedLinear::create(ParamStore& store, const std::string& name, int d_out,
                                            int d_in, int rank, Rng& rng) {
    if (rank < 1) {
        throw std::invalid_argument("adapter linear '" + name + "': rank must be >= 1");
    }
    const double bound = std::sqrt(6.0 / static_cast<double>(d_in + d_out));
    AdapterizedLinear lin;
    lin.base = store.add(name + ".base", Tensor::rand_uniform({d_out, d_in}, -bound, bound, rng),
                         ParamKind::Base);
    lin.bias = store.add(name + ".bias", Tensor::zeros({d_out}), ParamKind::Bias);
    lin.down = store.add(name + ".down", Tensor::rand_uniform({rank, d_in}, -0.05, 0.05, rng),
                         ParamKind::AdapterDown);
    lin.up = store.add(name + ".up", Tensor::zeros({d_out, rank}), ParamKind::AdapterUp);
    lin.scale = 1.0 / static_cast<double>(rank);
    return lin;
}

Var AdapterizedLinear::apply(GraphBinding& g, Var x) const {
    Tape& t = g.tape();
    Var eff = adapter_effective(t, g.var(base), g.var(up), g.var(down), scale);
    return t.add_rowvec(t.matmul(x, t.transpose(eff)), g.var(bias));
}

}  // namespace a2g
