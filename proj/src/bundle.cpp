#include "a2g/bundle.hpp"

#include <stdexcept>

namespace a2g {

ModelBundle ModelBundle::create(const MSTHParams& msth, WMConfig wm_cfg, AEConfig ae_cfg,
                                uint64_t init_seed, uint64_t env_fingerprint, int grid) {
    if (grid < 2 || grid % 2 != 0) {
        throw std::invalid_argument("bundle: grid must be even and >= 2");
    }
    ModelBundle b;
    b.msth = msth;
    b.schedule = compute_schedule(msth);
    wm_cfg.frames = b.schedule.frame_count();
    wm_cfg.pooled_dim = (grid / 2) * (grid / 2);
    ae_cfg.proximal = msth.proximal_horizon;
    ae_cfg.distal = msth.distal_count;
    ae_cfg.layers = wm_cfg.layers;
    ae_cfg.wm_width = wm_cfg.width;
    ae_cfg.adapter_rank = wm_cfg.adapter_rank;
    b.wm_cfg = wm_cfg;
    b.ae_cfg = ae_cfg;
    b.env_fingerprint = env_fingerprint;
    b.grid = grid;
    b.init_seed = init_seed;
    Rng init = Rng(init_seed).fork(stream::kInit);
    b.wm = WorldModel(wm_cfg, b.store, init);
    b.ae = ActionExpert(ae_cfg, b.store, init);
    b.validate_consistent();
    return b;
}

void ModelBundle::validate_consistent() const {
    if (ae_cfg.layers != wm_cfg.layers) {
        throw std::invalid_argument("bundle: action expert and world model layer counts differ");
    }
    if (wm_cfg.frames != schedule.frame_count()) {
        throw std::invalid_argument("bundle: wm frame count does not match schedule");
    }
    if (ae_cfg.rows() != schedule.action_rows()) {
        throw std::invalid_argument("bundle: action rows do not match schedule");
    }
    if (ae_cfg.wm_width != wm_cfg.width) {
        throw std::invalid_argument("bundle: cross-attention width does not match world model");
    }
    if (wm_cfg.pooled_dim != (grid / 2) * (grid / 2)) {
        throw std::invalid_argument("bundle: encoder pooled dim does not match grid");
    }
}

uint64_t ModelBundle::base_checksum() const {
    uint64_t h = 0xcbf29ce484222325ull;
    for (ParamKind k : {ParamKind::Base, ParamKind::Bias, ParamKind::Embed}) {
        h ^= store.checksum_of_kind(k);
        h *= 0x100000001b3ull;
    }
    return h;
}

uint64_t ModelBundle::adapter_checksum() const {
    uint64_t h = 0xcbf29ce484222325ull;
    for (ParamKind k : {ParamKind::AdapterDown, ParamKind::AdapterUp}) {
        h ^= store.checksum_of_kind(k);
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace a2g
