#include "a2g/actex.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "a2g/flow.hpp"

namespace a2g {

void AEConfig::validate() const {
    if (layers < 1 || width < 2 || action_dim < 1 || proprio_dim < 1 || proximal < 1 ||
        distal < 0 || denoise_steps < 1 || wm_width < 1 || mlp_ratio < 1 || adapter_rank < 1) {
        throw std::invalid_argument("ae config: non-positive dimension");
    }
    if (exec_prefix < 1 || exec_prefix > proximal) {
        throw std::invalid_argument("ae config: exec_prefix must lie in [1, P]");
    }
    if (width % heads != 0) {
        throw std::invalid_argument("ae config: width must be divisible by head count");
    }
    if (width % 2 != 0) {
        throw std::invalid_argument("ae config: width must be even (time features)");
    }
}

uint64_t AEConfig::fingerprint() const {
    uint64_t h = 0xcbf29ce484222325ull;
    for (int x : {layers, width, heads, action_dim, proprio_dim, proximal, distal, denoise_steps,
                  exec_prefix, wm_width, mlp_ratio, adapter_rank}) {
        h ^= static_cast<uint64_t>(static_cast<uint32_t>(x));
        h *= 0x100000001b3ull;
    }
    return h;
}

ActionExpert::ActionExpert(const AEConfig& cfg, ParamStore& store, Rng& init_rng) : cfg_(cfg) {
    cfg.validate();
    act_proj_ = AdapterizedLinear::create(store, "ae.act_proj", cfg.width, cfg.action_dim,
                                          cfg.adapter_rank, init_rng);
    proprio_proj_ = AdapterizedLinear::create(store, "ae.proprio_proj", cfg.width, cfg.proprio_dim,
                                              cfg.adapter_rank, init_rng);
    pos_embed_ = store.add("ae.pos_embed",
                           Tensor::rand_uniform({cfg.rows() + 1, cfg.width}, -0.02, 0.02, init_rng),
                           ParamKind::Embed);
    for (int l = 0; l < cfg.layers; ++l) {
        Block b;
        const std::string base = "ae.block" + std::to_string(l);
        b.self_attn = MultiHeadAttention::create(store, base + ".self", cfg.width, cfg.width,
                                                 cfg.heads, cfg.adapter_rank, init_rng);
        b.cross_attn = MultiHeadAttention::create(store, base + ".cross", cfg.width, cfg.wm_width,
                                                  cfg.heads, cfg.adapter_rank, init_rng);
        b.mlp = Mlp::create(store, base + ".mlp", cfg.width, cfg.width * cfg.mlp_ratio,
                            cfg.adapter_rank, init_rng);
        blocks_.push_back(b);
    }
    out_proj_ = AdapterizedLinear::create(store, "ae.out_proj", cfg.action_dim, cfg.width,
                                          cfg.adapter_rank, init_rng);
}

Var ActionExpert::forward(GraphBinding& g, Var noisy_actions, const std::vector<Var>& c_w,
                          Var proprio, double flow_t) const {
    Tape& t = g.tape();
    if (static_cast<int>(c_w.size()) != cfg_.layers) {
        throw std::invalid_argument("ae forward: got " + std::to_string(c_w.size()) +
                                    " feature layers, expected " + std::to_string(cfg_.layers));
    }
    const Tensor& na = t.val(noisy_actions);
    if (na.shape.size() != 2 || na.shape[0] != cfg_.rows() || na.shape[1] != cfg_.action_dim) {
        throw std::invalid_argument("ae forward: noisy actions " + na.shape_str() + ", expected [" +
                                    std::to_string(cfg_.rows()) + " x " +
                                    std::to_string(cfg_.action_dim) + "]");
    }
    if (flow_t < 0.0 || flow_t > 1.0) {
        throw std::invalid_argument("ae forward: flow time outside [0,1]");
    }
    const Tensor& pr = t.val(proprio);
    if (pr.shape.size() != 2 || pr.shape[0] != 1 || pr.shape[1] != cfg_.proprio_dim) {
        throw std::invalid_argument("ae forward: proprio " + pr.shape_str() + ", expected [1 x " +
                                    std::to_string(cfg_.proprio_dim) + "]");
    }
    const Var p_tok = proprio_proj_.apply(g, proprio);
    const Var a_tok = act_proj_.apply(g, noisy_actions);
    Var x = t.concat_rows({p_tok, a_tok});
    x = t.add(x, g.var(pos_embed_));
    x = t.add_rowvec(x, g.constant(sinusoidal_time_embed(flow_t, cfg_.width)));
    for (size_t l = 0; l < blocks_.size(); ++l) {
        const Block& b = blocks_[l];
        const Var h1 = t.layer_norm(x, kLayerNormEps);
        x = t.add(x, b.self_attn.apply(g, h1, h1));
        const Var h2 = t.layer_norm(x, kLayerNormEps);
        x = t.add(x, b.cross_attn.apply(g, h2, c_w[l]));
        const Var h3 = t.layer_norm(x, kLayerNormEps);
        x = t.add(x, b.mlp.apply(g, h3));
    }
    return out_proj_.apply(g, t.layer_norm(t.slice_rows(x, 1, cfg_.rows()), kLayerNormEps));
}

Tensor ActionExpert::generate(const ParamStore& store, const std::vector<Tensor>& c_w,
                              const Tensor& proprio, int n_steps, Rng noise_rng) const {
    if (n_steps < 1) {
        throw std::invalid_argument("ae generate: n_steps must be >= 1");
    }
    Tensor a = Tensor::randn({cfg_.rows(), cfg_.action_dim}, noise_rng);
    const double inv_n = 1.0 / static_cast<double>(n_steps);
    for (int n = 0; n < n_steps; ++n) {
        Tape tape;
        GraphBinding g(tape, store, TrainMode::FullOffline, false);
        std::vector<Var> cw_vars;
        cw_vars.reserve(c_w.size());
        for (const Tensor& f : c_w) {
            cw_vars.push_back(tape.leaf(f));
        }
        const Var noisy = tape.leaf(a);
        const Var prop = tape.leaf(proprio.as_row());
        const Var vel = forward(g, noisy, cw_vars, prop, static_cast<double>(n) * inv_n);
        const Tensor& v = tape.val(vel);
        for (size_t i = 0; i < a.data.size(); ++i) {
            a.data[i] += inv_n * v.data[i];
        }
        if (!a.all_finite()) {
            throw std::runtime_error("ae generate: diverged at denoising step " + std::to_string(n));
        }
    }
    return a;
}

}  // namespace a2g
