#include "a2g/gcwm.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "a2g/flow.hpp"

namespace a2g {

// --- shared blocks ---------------------------------------------------------

MultiHeadAttention MultiHeadAttention::create(ParamStore& store, const std::string& name,
                                              int d_model, int d_kv, int heads, int rank,
                                              Rng& rng) {
    if (d_model % heads != 0) {
        throw std::invalid_argument("attention '" + name + "': width " + std::to_string(d_model) +
                                    " not divisible by " + std::to_string(heads) + " heads");
    }
    MultiHeadAttention a;
    a.heads = heads;
    a.d_model = d_model;
    a.wq = AdapterizedLinear::create(store, name + ".wq", d_model, d_model, rank, rng);
    a.wk = AdapterizedLinear::create(store, name + ".wk", d_model, d_kv, rank, rng);
    a.wv = AdapterizedLinear::create(store, name + ".wv", d_model, d_kv, rank, rng);
    a.wo = AdapterizedLinear::create(store, name + ".wo", d_model, d_model, rank, rng);
    return a;
}

Var MultiHeadAttention::apply(GraphBinding& g, Var x_q, Var x_kv) const {
    Tape& t = g.tape();
    const Var q = wq.apply(g, x_q);
    const Var k = wk.apply(g, x_kv);
    const Var v = wv.apply(g, x_kv);
    const int hd = d_model / heads;
    std::vector<Var> head_outs;
    head_outs.reserve(static_cast<size_t>(heads));
    for (int h = 0; h < heads; ++h) {
        const Var qh = t.slice_cols(q, h * hd, hd);
        const Var kh = t.slice_cols(k, h * hd, hd);
        const Var vh = t.slice_cols(v, h * hd, hd);
        head_outs.push_back(t.attention(qh, kh, vh));
    }
    const Var merged = heads == 1 ? head_outs[0] : t.concat_cols(head_outs);
    return wo.apply(g, merged);
}

Mlp Mlp::create(ParamStore& store, const std::string& name, int d_model, int hidden, int rank,
                Rng& rng) {
    Mlp m;
    m.fc1 = AdapterizedLinear::create(store, name + ".fc1", hidden, d_model, rank, rng);
    m.fc2 = AdapterizedLinear::create(store, name + ".fc2", d_model, hidden, rank, rng);
    return m;
}

Var Mlp::apply(GraphBinding& g, Var x) const {
    Tape& t = g.tape();
    return fc2.apply(g, t.gelu_act(fc1.apply(g, x)));
}

// --- world model -----------------------------------------------------------

void WMConfig::validate() const {
    if (d_z < 1 || layers < 1 || width < 2 || frames < 1 || denoise_steps < 1 || pooled_dim < 1 ||
        mlp_ratio < 1 || adapter_rank < 1) {
        throw std::invalid_argument("wm config: non-positive dimension");
    }
    if (width % heads != 0) {
        throw std::invalid_argument("wm config: width must be divisible by head count");
    }
    if (width % 2 != 0) {
        throw std::invalid_argument("wm config: width must be even (time features)");
    }
}

uint64_t WMConfig::fingerprint() const {
    uint64_t h = 0xcbf29ce484222325ull;
    for (int x : {d_z, layers, width, heads, frames, denoise_steps, pooled_dim, mlp_ratio,
                  adapter_rank, use_pos_embed ? 1 : 0}) {
        h ^= static_cast<uint64_t>(static_cast<uint32_t>(x));
        h *= 0x100000001b3ull;
    }
    return h;
}

Tensor avg_pool2(const Tensor& image) {
    if (image.shape.size() != 2 || image.shape[0] != image.shape[1] || image.shape[0] % 2 != 0) {
        throw_shape_error("avg_pool2", image);
    }
    const int g = image.shape[0];
    const int half = g / 2;
    Tensor out = Tensor::zeros({half * half});
    for (int r = 0; r < half; ++r) {
        for (int c = 0; c < half; ++c) {
            const double s = image.at(2 * r, 2 * c) + image.at(2 * r, 2 * c + 1) +
                             image.at(2 * r + 1, 2 * c) + image.at(2 * r + 1, 2 * c + 1);
            out.data[static_cast<size_t>(r) * half + c] = 0.25 * s;
        }
    }
    return out;
}

WorldModel::WorldModel(const WMConfig& cfg, ParamStore& store, Rng& init_rng) : cfg_(cfg) {
    cfg.validate();
    enc_ = AdapterizedLinear::create(store, "wm.enc", cfg.d_z, cfg.pooled_dim, cfg.adapter_rank,
                                     init_rng);
    cond_proj_ = AdapterizedLinear::create(store, "wm.cond_proj", cfg.width, cfg.d_z,
                                           cfg.adapter_rank, init_rng);
    frame_proj_ = AdapterizedLinear::create(store, "wm.frame_proj", cfg.width, cfg.d_z,
                                            cfg.adapter_rank, init_rng);
    pos_embed_ = store.add("wm.pos_embed",
                           Tensor::rand_uniform({cfg.frames + 2, cfg.width}, -0.02, 0.02, init_rng),
                           ParamKind::Embed);
    for (int l = 0; l < cfg.layers; ++l) {
        Block b;
        const std::string base = "wm.block" + std::to_string(l);
        b.attn = MultiHeadAttention::create(store, base + ".attn", cfg.width, cfg.width, cfg.heads,
                                            cfg.adapter_rank, init_rng);
        b.mlp = Mlp::create(store, base + ".mlp", cfg.width, cfg.width * cfg.mlp_ratio,
                            cfg.adapter_rank, init_rng);
        blocks_.push_back(b);
    }
    out_proj_ = AdapterizedLinear::create(store, "wm.out_proj", cfg.d_z, cfg.width,
                                          cfg.adapter_rank, init_rng);
}

Var WorldModel::encode_graph(GraphBinding& g, const Tensor& image) const {
    for (double v : image.data) {
        if (v < -1e-9 || v > 1.0 + 1e-9) {
            throw std::invalid_argument("encode: image values outside [0,1]");
        }
    }
    const Var pooled = g.constant(avg_pool2(image).as_row());
    return enc_.apply(g, pooled);  // [1 x d_z]
}

Tensor WorldModel::encode(const ParamStore& store, const Tensor& image) const {
    Tape tape;
    GraphBinding g(tape, store, TrainMode::FullOffline, false);
    const Var z = encode_graph(g, image);
    return tape.val(z).reshaped({cfg_.d_z});
}

Var WorldModel::token_stack(GraphBinding& g, Var noisy, Var z_t, Var z_g, double flow_t) const {
    Tape& t = g.tape();
    for (Var c : {z_t, z_g}) {
        const Tensor& zc = t.val(c);
        if (zc.shape.size() != 2 || zc.shape[0] != 1 || zc.shape[1] != cfg_.d_z) {
            throw std::invalid_argument("wm forward: conditioning latent " + zc.shape_str() +
                                        ", expected [1 x " + std::to_string(cfg_.d_z) + "]");
        }
    }
    const Var zt_tok = cond_proj_.apply(g, z_t);
    const Var zg_tok = cond_proj_.apply(g, z_g);
    const Var fr_tok = frame_proj_.apply(g, noisy);
    Var x = t.concat_rows({zt_tok, zg_tok, fr_tok});
    if (cfg_.use_pos_embed) {
        x = t.add(x, g.var(pos_embed_));
    }
    const Var tf = g.constant(sinusoidal_time_embed(flow_t, cfg_.width));
    return t.add_rowvec(x, tf);
}

WorldModel::Forward WorldModel::forward(GraphBinding& g, Var noisy, Var z_t, Var z_g,
                                        double flow_t) const {
    Tape& t = g.tape();
    const Tensor& nz = t.val(noisy);
    if (nz.shape.size() != 2 || nz.shape[0] != cfg_.frames || nz.shape[1] != cfg_.d_z) {
        throw std::invalid_argument("wm forward: noisy frames " + nz.shape_str() + ", expected [" +
                                    std::to_string(cfg_.frames) + " x " + std::to_string(cfg_.d_z) +
                                    "]");
    }
    if (flow_t < 0.0 || flow_t > 1.0) {
        throw std::invalid_argument("wm forward: flow time outside [0,1]");
    }
    Var x = token_stack(g, noisy, z_t, z_g, flow_t);
    Forward out;
    for (const Block& b : blocks_) {
        const Var h1 = t.layer_norm(x, kLayerNormEps);
        x = t.add(x, b.attn.apply(g, h1, h1));
        const Var h2 = t.layer_norm(x, kLayerNormEps);
        x = t.add(x, b.mlp.apply(g, h2));
        out.feats.push_back(t.slice_rows(x, 2, cfg_.frames));
    }
    out.velocity = out_proj_.apply(g, t.layer_norm(t.slice_rows(x, 2, cfg_.frames), kLayerNormEps));
    return out;
}

WorldModel::Generated WorldModel::generate(const ParamStore& store, const Tensor& z_t,
                                           const Tensor& z_g, int n_steps, Rng noise_rng) const {
    if (n_steps < 1) {
        throw std::invalid_argument("wm generate: n_steps must be >= 1");
    }
    Generated out;
    Tensor z = Tensor::randn({cfg_.frames, cfg_.d_z}, noise_rng);
    const double inv_n = 1.0 / static_cast<double>(n_steps);
    for (int n = 0; n < n_steps; ++n) {
        Tape tape;
        GraphBinding g(tape, store, TrainMode::FullOffline, false);
        const Var zt = tape.leaf(z_t.as_row());
        const Var zg = tape.leaf(z_g.as_row());
        const Var noisy = tape.leaf(z);
        const Forward f = forward(g, noisy, zt, zg, static_cast<double>(n) * inv_n);
        const Tensor& v = tape.val(f.velocity);
        for (size_t i = 0; i < z.data.size(); ++i) {
            z.data[i] += inv_n * v.data[i];
        }
        if (!z.all_finite()) {
            throw std::runtime_error("wm generate: diverged at denoising step " + std::to_string(n));
        }
        if (n == n_steps - 1) {
            out.feats.reserve(f.feats.size());
            for (Var fv : f.feats) {
                out.feats.push_back(tape.val(fv));
            }
        }
    }
    out.frames = std::move(z);
    return out;
}

}  // namespace a2g
