#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "a2g/bundle.hpp"
#include "a2g/gcwm.hpp"
#include "a2g/gradcheck.hpp"
#include "a2g/simenv.hpp"

using namespace a2g;

namespace {

WMConfig tiny_cfg() {
    WMConfig c;
    c.d_z = 4;
    c.layers = 2;
    c.width = 8;
    c.heads = 2;
    c.frames = 3;
    c.denoise_steps = 4;
    c.pooled_dim = 16;  // G = 8
    c.mlp_ratio = 2;
    c.adapter_rank = 2;
    return c;
}

struct TinyModel {
    ParamStore store;
    WorldModel wm;
    explicit TinyModel(const WMConfig& cfg, uint64_t seed = 11) {
        Rng rng(seed);
        wm = WorldModel(cfg, store, rng);
    }
};

Tensor random_image(int g, uint64_t seed) {
    Rng rng(seed);
    Tensor img = Tensor::zeros({g, g});
    for (double& v : img.data) {
        v = rng.uniform();
    }
    return img;
}

}  // namespace

TEST_CASE("avg_pool2 halves each side") {
    Tensor img = Tensor::zeros({4, 4});
    for (int i = 0; i < 16; ++i) {
        img.data[static_cast<size_t>(i)] = i;
    }
    const Tensor p = avg_pool2(img);
    REQUIRE(p.numel() == 4);
    CHECK(p.data[0] == doctest::Approx((0 + 1 + 4 + 5) / 4.0));
    CHECK(p.data[3] == doctest::Approx((10 + 11 + 14 + 15) / 4.0));
    CHECK_THROWS_AS(avg_pool2(Tensor::zeros({3, 3})), std::invalid_argument);
}

TEST_CASE("encode: zero image yields the projection bias") {
    TinyModel m(tiny_cfg());
    const Tensor z = m.wm.encode(m.store, Tensor::zeros({8, 8}));
    const Tensor& bias = m.store.at(m.store.find("wm.enc.bias")).value;
    CHECK(max_abs_diff(z, bias) == 0.0);
    CHECK_THROWS_AS(m.wm.encode(m.store, Tensor::full({8, 8}, 1.5)), std::invalid_argument);
}

TEST_CASE("encode: injective over 1000 rendered scenes") {
    EnvConfig env;
    env.task = Task::Push;
    env.grid = 16;
    WMConfig cfg = tiny_cfg();
    cfg.pooled_dim = 64;
    TinyModel m(cfg);
    std::vector<Tensor> latents;
    Rng rng(3);
    for (int i = 0; i < 1000; ++i) {
        WorldState s;
        // grid-separated positions so no two scenes coincide
        s.agent = {0.05 + 0.009 * (i % 100), 0.05 + 0.09 * (i / 100)};
        s.blocks = {{0.9 - 0.0008 * i, 0.5}};
        latents.push_back(m.wm.encode(m.store, render(s, env)));
    }
    double min_dist = 1e9;
    for (size_t i = 0; i < latents.size(); ++i) {
        for (size_t j = i + 1; j < latents.size(); ++j) {
            min_dist = std::min(min_dist, max_abs_diff(latents[i], latents[j]));
        }
    }
    CHECK(min_dist > 1e-9);
}

TEST_CASE("encode: goal latent equals encoding the stored goal image") {
    EnvConfig env;
    env.task = Task::Push;
    env.grid = 8;
    TinyModel m(tiny_cfg());
    const ResetResult rr = reset(env, 5);
    const Tensor a = m.wm.encode(m.store, rr.goal.goal_image);
    const Tensor b = m.wm.encode(m.store, render(rr.goal.goal_state, env));
    CHECK(tensor_checksum(a) == tensor_checksum(b));
}

TEST_CASE("wm_forward: shape contract and flow-time validation") {
    const WMConfig cfg = tiny_cfg();
    TinyModel m(cfg);
    Tape tape;
    GraphBinding g(tape, m.store, TrainMode::FullOffline, false);
    Rng rng(9);
    const Var noisy = g.constant(Tensor::randn({cfg.frames, cfg.d_z}, rng));
    const Var z_t = g.constant(Tensor::randn({cfg.d_z}, rng).as_row());
    const Var z_g = g.constant(Tensor::randn({cfg.d_z}, rng).as_row());
    const WorldModel::Forward f = m.wm.forward(g, noisy, z_t, z_g, 0.5);
    CHECK(tape.val(f.velocity).shape == std::vector<int>{cfg.frames, cfg.d_z});
    REQUIRE(static_cast<int>(f.feats.size()) == cfg.layers);
    for (Var fv : f.feats) {
        CHECK(tape.val(fv).shape == std::vector<int>{cfg.frames, cfg.width});
    }
    CHECK_THROWS_AS(m.wm.forward(g, noisy, z_t, z_g, 1.5), std::invalid_argument);
    const Var bad = g.constant(Tensor::randn({cfg.frames + 1, cfg.d_z}, rng));
    CHECK_THROWS_AS(m.wm.forward(g, bad, z_t, z_g, 0.5), std::invalid_argument);
}

TEST_CASE("wm_forward: gradient of squared velocity passes the fd check") {
    WMConfig cfg = tiny_cfg();
    cfg.layers = 1;  // keep the fd sweep quick
    TinyModel m(cfg);
    // pack every parameter as a checked input
    std::vector<Tensor> params;
    for (int i = 0; i < m.store.count(); ++i) {
        params.push_back(m.store.at(i).value);
    }
    Rng rng(13);
    const Tensor noisy = Tensor::randn({cfg.frames, cfg.d_z}, rng);
    const Tensor zt = Tensor::randn({cfg.d_z}, rng).as_row();
    const Tensor zg = Tensor::randn({cfg.d_z}, rng).as_row();
    const ParamStore& store = m.store;
    const WorldModel& wm = m.wm;
    const TapeFn f = [&](Tape& t, const std::vector<Var>& p) {
        GraphBinding bind(t, store, TrainMode::FullOffline, true);
        for (size_t i = 0; i < p.size(); ++i) {
            bind.adopt(static_cast<int>(i), p[i]);  // values come from the checker's leaves
        }
        const WorldModel::Forward fw =
            wm.forward(bind, bind.constant(noisy), bind.constant(zt), bind.constant(zg), 0.35);
        return t.mean_all(t.square(fw.velocity));
    };
    const double err = finite_diff_check(f, params, 1e-5, 6, 99);
    CHECK(err < 1e-4);
}

TEST_CASE("wm_forward: permutation equivariance without positional embeddings") {
    WMConfig cfg = tiny_cfg();
    cfg.use_pos_embed = false;
    TinyModel m(cfg);
    Rng rng(21);
    Tensor noisy = Tensor::randn({cfg.frames, cfg.d_z}, rng);
    const Tensor zt = Tensor::randn({cfg.d_z}, rng).as_row();
    const Tensor zg = Tensor::randn({cfg.d_z}, rng).as_row();
    auto run = [&](const Tensor& frames) {
        Tape tape;
        GraphBinding g(tape, m.store, TrainMode::FullOffline, false);
        const WorldModel::Forward f =
            m.wm.forward(g, g.constant(frames), g.constant(zt), g.constant(zg), 0.25);
        return tape.val(f.velocity);
    };
    const Tensor v1 = run(noisy);
    // swap frame rows 1 and 2
    Tensor swapped = noisy;
    for (int c = 0; c < cfg.d_z; ++c) {
        std::swap(swapped.at(1, c), swapped.at(2, c));
    }
    const Tensor v2 = run(swapped);
    for (int c = 0; c < cfg.d_z; ++c) {
        CHECK(v1.at(1, c) == doctest::Approx(v2.at(2, c)).epsilon(1e-12));
        CHECK(v1.at(2, c) == doctest::Approx(v2.at(1, c)).epsilon(1e-12));
        CHECK(v1.at(0, c) == doctest::Approx(v2.at(0, c)).epsilon(1e-12));
    }
}

TEST_CASE("wm_generate: determinism and feats from the final pass") {
    const WMConfig cfg = tiny_cfg();
    TinyModel m(cfg);
    Rng rng(31);
    const Tensor zt = Tensor::randn({cfg.d_z}, rng);
    const Tensor zg = Tensor::randn({cfg.d_z}, rng);
    const WorldModel::Generated a = m.wm.generate(m.store, zt, zg, 4, Rng(555));
    const WorldModel::Generated b = m.wm.generate(m.store, zt, zg, 4, Rng(555));
    CHECK(tensor_checksum(a.frames) == tensor_checksum(b.frames));
    REQUIRE(a.feats.size() == static_cast<size_t>(cfg.layers));
    for (size_t l = 0; l < a.feats.size(); ++l) {
        CHECK(tensor_checksum(a.feats[l]) == tensor_checksum(b.feats[l]));
    }
    const WorldModel::Generated c = m.wm.generate(m.store, zt, zg, 4, Rng(556));
    CHECK(tensor_checksum(a.frames) != tensor_checksum(c.frames));
    CHECK_THROWS_AS(m.wm.generate(m.store, zt, zg, 0, Rng(1)), std::invalid_argument);
}

TEST_CASE("bundle: cross-config consistency enforced at create") {
    MSTHParams msth;
    msth.total_horizon = 12;
    msth.proximal_horizon = 4;
    msth.vision_stride = 2;
    msth.distal_count = 2;
    WMConfig wm = tiny_cfg();
    AEConfig ae;
    ae.width = 8;
    ae.heads = 2;
    ae.exec_prefix = 3;
    const ModelBundle b = ModelBundle::create(msth, wm, ae, 7, 42, 8);
    CHECK(b.wm_cfg.frames == 4);       // P/r + M
    CHECK(b.ae_cfg.rows() == 6);       // P + M
    CHECK(b.ae_cfg.layers == b.wm_cfg.layers);
    CHECK(b.wm_cfg.pooled_dim == 16);  // (8/2)^2
    CHECK(b.base_checksum() != 0);
}
