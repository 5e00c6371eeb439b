#pragma once

#include <cstdint>
#include <vector>

#include "a2g/blocks.hpp"
#include "a2g/params.hpp"
#include "a2g/rng.hpp"
#include "a2g/tape.hpp"
#include "a2g/tensor.hpp"

namespace a2g {

// Goal-conditioned world model configuration. frames is the number of
// predicted latent frames and must equal the active schedule's frame count;
// pooled_dim is (G/2)^2 for the fixed 2x average-pool front end.
struct WMConfig {
    int d_z = 12;
    int layers = 2;
    int width = 48;
    int heads = 4;
    int frames = 7;
    int denoise_steps = 4;  // N_v
    int pooled_dim = 64;
    int mlp_ratio = 2;
    int adapter_rank = 4;
    bool use_pos_embed = true;

    void validate() const;
    uint64_t fingerprint() const;
};

// Fixed 2x average pooling of a [G x G] image to a flat vector of (G/2)^2.
Tensor avg_pool2(const Tensor& image);

// Transformer over [current, goal, frame_1..frame_F] tokens. Learns the
// velocity field of a linear (rectified) flow from standard normal noise to
// the encoded MSTH frame stack, and exposes per-layer hidden states at the
// frame positions for the action expert.
class WorldModel {
public:
    WorldModel() = default;
    WorldModel(const WMConfig& cfg, ParamStore& store, Rng& init_rng);

    const WMConfig& config() const { return cfg_; }

    // encoder: fixed pool + learned affine. Value-space and graph forms share
    // the same parameters.
    Tensor encode(const ParamStore& store, const Tensor& image) const;
    Var encode_graph(GraphBinding& g, const Tensor& image) const;

    struct Forward {
        Var velocity;            // [F x d_z]
        std::vector<Var> feats;  // L entries, each [F x width]
    };
    Forward forward(GraphBinding& g, Var noisy, Var z_t, Var z_g, double flow_t) const;

    struct Generated {
        Tensor frames;              // [F x d_z]
        std::vector<Tensor> feats;  // from the final denoising pass
    };
    // Seeded standard-normal init, denoise_steps Euler steps with
    // flow_t = n/N; deterministic per rng state.
    Generated generate(const ParamStore& store, const Tensor& z_t, const Tensor& z_g, int n_steps,
                       Rng noise_rng) const;

private:
    Var token_stack(GraphBinding& g, Var noisy, Var z_t, Var z_g, double flow_t) const;

    WMConfig cfg_;
    AdapterizedLinear enc_;
    AdapterizedLinear cond_proj_;
    AdapterizedLinear frame_proj_;
    int pos_embed_ = -1;
    struct Block {
        MultiHeadAttention attn;
        Mlp mlp;
    };
    std::vector<Block> blocks_;
    AdapterizedLinear out_proj_;
};

}  // namespace a2g
