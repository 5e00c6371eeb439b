#pragma once

#include "a2g/params.hpp"
#include "a2g/rng.hpp"
#include "a2g/tape.hpp"
#include "a2g/tensor.hpp"

namespace a2g {

// Frozen-base weight with a trainable low-rank additive delta.
// effective = base + scale * (up @ down). With up == 0 the effective weight
// equals base bit-exactly, so a fresh adapter never changes model behavior.
struct AdapterizedWeight {
    Tensor base;  // [d_out x d_in]
    Tensor down;  // [rank x d_in]
    Tensor up;    // [d_out x rank]
    double scale = 0.0;
    int rank = 0;
};

// Value-space effective weight; validates rank/shape consistency.
Tensor adapter_effective(const AdapterizedWeight& w);

// Graph form used inside forward passes; grads flow to whichever of the three
// leaves is marked trainable by the binding's mode.
Var adapter_effective(Tape& tape, Var base, Var up, Var down, double scale);

// Fully-connected layer whose weight carries an adapter. Parameters live in
// the shared store; the struct only holds indices.
struct AdapterizedLinear {
    int base = -1;
    int down = -1;
    int up = -1;
    int bias = -1;
    double scale = 0.0;

    // Registers base [d_out x d_in] (Xavier-uniform), bias zeros, down small
    // uniform, up zeros, scale 1/rank.
    static AdapterizedLinear create(ParamStore& store, const std::string& name, int d_out,
                                    int d_in, int rank, Rng& rng);

    // x [T x d_in] -> [T x d_out]
    Var apply(GraphBinding& g, Var x) const;
};

}  // namespace a2g
