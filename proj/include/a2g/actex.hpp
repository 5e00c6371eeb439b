#pragma once

#include <cstdint>
#include <vector>

#include "a2g/blocks.hpp"
#include "a2g/params.hpp"
#include "a2g/rng.hpp"
#include "a2g/tape.hpp"
#include "a2g/tensor.hpp"

namespace a2g {

// Action expert configuration. Block count mirrors the world model; proximal
// and distal row counts come from the active schedule; exec_prefix is the
// number of proximal actions consumed per control cycle.
struct AEConfig {
    int layers = 2;
    int width = 32;
    int heads = 4;
    int action_dim = 3;
    int proprio_dim = 3;
    int proximal = 8;  // P
    int distal = 3;    // M
    int denoise_steps = 4;  // N_a
    int exec_prefix = 6;    // P_exec
    int wm_width = 48;
    int mlp_ratio = 2;
    int adapter_rank = 4;

    int rows() const { return proximal + distal; }
    void validate() const;
    uint64_t fingerprint() const;
};

// Narrower stack isomorphic to the world model: self-attention over action
// tokens plus a proprio token, cross-attention into the matching world-model
// layer's features, pointwise MLP. Denoises the MSTH action stack.
class ActionExpert {
public:
    ActionExpert() = default;
    ActionExpert(const AEConfig& cfg, ParamStore& store, Rng& init_rng);

    const AEConfig& config() const { return cfg_; }

    // noisy_actions [(P+M) x action_dim], c_w one entry per layer, proprio
    // [1 x proprio_dim] -> velocity [(P+M) x action_dim]
    Var forward(GraphBinding& g, Var noisy_actions, const std::vector<Var>& c_w, Var proprio,
                double flow_t) const;

    Tensor generate(const ParamStore& store, const std::vector<Tensor>& c_w, const Tensor& proprio,
                    int n_steps, Rng noise_rng) const;

private:
    AEConfig cfg_;
    AdapterizedLinear act_proj_;
    AdapterizedLinear proprio_proj_;
    int pos_embed_ = -1;
    struct Block {
        MultiHeadAttention self_attn;
        MultiHeadAttention cross_attn;
        Mlp mlp;
    };
    std::vector<Block> blocks_;
    AdapterizedLinear out_proj_;
};

}  // namespace a2g
