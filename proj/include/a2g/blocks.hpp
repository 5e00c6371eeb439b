#pragma once

#include <string>
#include <vector>

#include "a2g/adapter.hpp"
#include "a2g/params.hpp"
#include "a2g/rng.hpp"
#include "a2g/tape.hpp"

namespace a2g {

inline constexpr double kLayerNormEps = 1e-5;

// Multi-head attention with adapterized projections. For self-attention pass
// the same sequence for queries and keys/values; for cross-attention the
// key/value source may have a different width.
struct MultiHeadAttention {
    AdapterizedLinear wq;
    AdapterizedLinear wk;
    AdapterizedLinear wv;
    AdapterizedLinear wo;
    int heads = 1;
    int d_model = 0;

    static MultiHeadAttention create(ParamStore& store, const std::string& name, int d_model,
                                     int d_kv, int heads, int rank, Rng& rng);
    Var apply(GraphBinding& g, Var x_q, Var x_kv) const;
};

struct Mlp {
    AdapterizedLinear fc1;
    AdapterizedLinear fc2;

    static Mlp create(ParamStore& store, const std::string& name, int d_model, int hidden,
                      int rank, Rng& rng);
    Var apply(GraphBinding& g, Var x) const;
};

}  // namespace a2g
