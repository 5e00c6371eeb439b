#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "a2g/actex.hpp"
#include "a2g/bundle.hpp"
#include "a2g/gradcheck.hpp"
#include "a2g/policy.hpp"
#include "a2g/simenv.hpp"

using namespace a2g;

namespace {

AEConfig tiny_ae() {
    AEConfig c;
    c.layers = 2;
    c.width = 8;
    c.heads = 2;
    c.action_dim = 3;
    c.proprio_dim = 3;
    c.proximal = 4;
    c.distal = 2;
    c.denoise_steps = 3;
    c.exec_prefix = 3;
    c.wm_width = 10;
    c.mlp_ratio = 2;
    c.adapter_rank = 2;
    return c;
}

struct TinyAE {
    ParamStore store;
    ActionExpert ae;
    explicit TinyAE(const AEConfig& cfg, uint64_t seed = 17) {
        Rng rng(seed);
        ae = ActionExpert(cfg, store, rng);
    }
};

std::vector<Tensor> random_feats(const AEConfig& cfg, int frames, uint64_t seed) {
    Rng rng(seed);
    std::vector<Tensor> f;
    for (int l = 0; l < cfg.layers; ++l) {
        f.push_back(Tensor::randn({frames, cfg.wm_width}, rng));
    }
    return f;
}

}  // namespace

TEST_CASE("ae_forward: output shape and input validation") {
    const AEConfig cfg = tiny_ae();
    TinyAE m(cfg);
    Rng rng(1);
    Tape tape;
    GraphBinding g(tape, m.store, TrainMode::FullOffline, false);
    const std::vector<Tensor> feats = random_feats(cfg, 5, 2);
    std::vector<Var> fv;
    for (const Tensor& f : feats) {
        fv.push_back(g.constant(f));
    }
    const Var noisy = g.constant(Tensor::randn({cfg.rows(), cfg.action_dim}, rng));
    const Var prop = g.constant(Tensor::randn({cfg.proprio_dim}, rng).as_row());
    const Var vel = m.ae.forward(g, noisy, fv, prop, 0.5);
    CHECK(tape.val(vel).shape == std::vector<int>{cfg.rows(), cfg.action_dim});

    // layer-count mismatch is rejected
    std::vector<Var> short_fv(fv.begin(), fv.end() - 1);
    CHECK_THROWS_AS(m.ae.forward(g, noisy, short_fv, prop, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(m.ae.forward(g, noisy, fv, prop, -0.1), std::invalid_argument);
}

TEST_CASE("ae_forward: cross-attention is live (zeroing features changes output)") {
    const AEConfig cfg = tiny_ae();
    TinyAE m(cfg);
    Rng rng(3);
    const Tensor noisy = Tensor::randn({cfg.rows(), cfg.action_dim}, rng);
    const Tensor prop = Tensor::randn({cfg.proprio_dim}, rng).as_row();
    const std::vector<Tensor> feats = random_feats(cfg, 5, 4);
    auto run = [&](const std::vector<Tensor>& f) {
        Tape tape;
        GraphBinding g(tape, m.store, TrainMode::FullOffline, false);
        std::vector<Var> fv;
        for (const Tensor& x : f) {
            fv.push_back(g.constant(x));
        }
        return tape.val(m.ae.forward(g, g.constant(noisy), fv, g.constant(prop), 0.5));
    };
    const Tensor with = run(feats);
    std::vector<Tensor> zeroed;
    for (const Tensor& f : feats) {
        zeroed.push_back(Tensor::zeros(f.shape));
    }
    const Tensor without = run(zeroed);
    CHECK(max_abs_diff(with, without) > 1e-8);
}

TEST_CASE("ae_forward: layer order of the conditioning stack matters") {
    AEConfig cfg = tiny_ae();
    TinyAE m(cfg);
    Rng rng(5);
    const Tensor noisy = Tensor::randn({cfg.rows(), cfg.action_dim}, rng);
    const Tensor prop = Tensor::randn({cfg.proprio_dim}, rng).as_row();
    std::vector<Tensor> feats = random_feats(cfg, 4, 6);
    auto run = [&](const std::vector<Tensor>& f) {
        Tape tape;
        GraphBinding g(tape, m.store, TrainMode::FullOffline, false);
        std::vector<Var> fv;
        for (const Tensor& x : f) {
            fv.push_back(g.constant(x));
        }
        return tape.val(m.ae.forward(g, g.constant(noisy), fv, g.constant(prop), 0.5));
    };
    const Tensor ab = run(feats);
    std::swap(feats[0], feats[1]);
    const Tensor ba = run(feats);
    CHECK(max_abs_diff(ab, ba) > 1e-10);  // block l reads exactly layer l
}

TEST_CASE("ae_forward: gradients through cross-attention and the proprio token") {
    AEConfig cfg = tiny_ae();
    cfg.layers = 1;
    TinyAE m(cfg);
    std::vector<Tensor> params;
    for (int i = 0; i < m.store.count(); ++i) {
        params.push_back(m.store.at(i).value);
    }
    Rng rng(7);
    const Tensor noisy = Tensor::randn({cfg.rows(), cfg.action_dim}, rng);
    const Tensor prop = Tensor::randn({cfg.proprio_dim}, rng).as_row();
    const Tensor feat = Tensor::randn({4, cfg.wm_width}, rng);
    const ParamStore& store = m.store;
    const ActionExpert& ae = m.ae;
    const TapeFn f = [&](Tape& t, const std::vector<Var>& p) {
        GraphBinding bind(t, store, TrainMode::FullOffline, true);
        for (size_t i = 0; i < p.size(); ++i) {
            bind.adopt(static_cast<int>(i), p[i]);
        }
        const Var vel = ae.forward(bind, bind.constant(noisy), {bind.constant(feat)},
                                   bind.constant(prop), 0.6);
        return t.mean_all(t.square(vel));
    };
    CHECK(finite_diff_check(f, params, 1e-5, 6, 42) < 1e-4);
}

TEST_CASE("ae_generate: determinism and stub telescoping via the bundle sampler") {
    const AEConfig cfg = tiny_ae();
    TinyAE m(cfg);
    const std::vector<Tensor> feats = random_feats(cfg, 4, 8);
    Rng rng(9);
    const Tensor prop = Tensor::randn({cfg.proprio_dim}, rng);
    const Tensor a = m.ae.generate(m.store, feats, prop, 4, Rng(1234));
    const Tensor b = m.ae.generate(m.store, feats, prop, 4, Rng(1234));
    CHECK(tensor_checksum(a) == tensor_checksum(b));
    const Tensor c = m.ae.generate(m.store, feats, prop, 4, Rng(1235));
    CHECK(tensor_checksum(a) != tensor_checksum(c));
    CHECK_THROWS_AS(m.ae.generate(m.store, feats, prop, 0, Rng(1)), std::invalid_argument);
}

TEST_CASE("act: executed prefix, clipping, and per-seed determinism") {
    EnvConfig env;
    env.task = Task::Push;
    env.grid = 8;
    MSTHParams msth;
    msth.total_horizon = 13;
    msth.proximal_horizon = 10;
    msth.vision_stride = 2;
    msth.distal_count = 3;
    WMConfig wm;
    wm.d_z = 4;
    wm.layers = 2;
    wm.width = 8;
    wm.heads = 2;
    wm.denoise_steps = 2;
    wm.adapter_rank = 2;
    AEConfig ae = tiny_ae();
    ae.exec_prefix = 8;
    const ModelBundle bundle = ModelBundle::create(msth, wm, ae, 3, env.fingerprint(), env.grid);
    CHECK(bundle.ae_cfg.proximal == 10);
    CHECK(bundle.ae_cfg.distal == 3);

    const ResetResult rr = reset(env, 77);
    const PolicyOutput out = act(bundle, rr.obs, rr.goal, env, Rng(42));
    CHECK(out.actions.shape == std::vector<int>{13, 3});
    CHECK(out.exec_prefix == 8);
    CHECK(out.executed().rows() == 8);  // P=10, M=3, P_exec=8: exactly 8 rows per cycle
    for (int r = 0; r < out.actions.rows(); ++r) {
        CHECK(std::fabs(out.actions.at(r, 0)) <= env.a_max);
        CHECK(std::fabs(out.actions.at(r, 1)) <= env.a_max);
        CHECK(out.actions.at(r, 2) >= 0.0);
        CHECK(out.actions.at(r, 2) <= 1.0);
    }
    const PolicyOutput again = act(bundle, rr.obs, rr.goal, env, Rng(42));
    CHECK(tensor_checksum(out.actions) == tensor_checksum(again.actions));
    const PolicyOutput other = act(bundle, rr.obs, rr.goal, env, Rng(43));
    CHECK(tensor_checksum(out.actions) != tensor_checksum(other.actions));
}

TEST_CASE("run_episode: receding horizon advances exactly exec_prefix steps per cycle") {
    EnvConfig env;
    env.task = Task::Push;
    env.grid = 8;
    env.t_max = 30;
    MSTHParams msth;
    msth.total_horizon = 8;
    msth.proximal_horizon = 4;
    msth.vision_stride = 2;
    msth.distal_count = 2;
    WMConfig wm;
    wm.d_z = 4;
    wm.layers = 1;
    wm.width = 8;
    wm.heads = 2;
    wm.denoise_steps = 2;
    AEConfig ae = tiny_ae();
    ae.denoise_steps = 2;
    ae.exec_prefix = 4;
    const ModelBundle bundle = ModelBundle::create(msth, wm, ae, 5, env.fingerprint(), env.grid);
    const EpisodeResult r = run_episode(env, bundle, 9, false, Rng(1));
    // an untrained policy never succeeds here; every cycle advances P_exec steps
    if (!r.success) {
        CHECK(r.steps == r.cycles * bundle.ae_cfg.exec_prefix);
        CHECK(r.cycles == (env.t_max + 3) / 4);
    }
    const EpisodeResult r2 = run_episode(env, bundle, 9, false, Rng(1));
    CHECK(r.success == r2.success);
    CHECK(r.steps == r2.steps);
    CHECK(r.mean_exec_magnitude == r2.mean_exec_magnitude);
}

TEST_CASE("ae config validation") {
    AEConfig c = tiny_ae();
    c.exec_prefix = 5;  // > proximal
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = tiny_ae();
    c.width = 9;  // not divisible by heads
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}
