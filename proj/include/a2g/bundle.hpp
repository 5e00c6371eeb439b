#pragma once

#include <cstdint>

#include "a2g/actex.hpp"
#include "a2g/gcwm.hpp"
#include "a2g/msth.hpp"
#include "a2g/params.hpp"

namespace a2g {

// World model + action expert sharing one parameter store, plus the schedule
// and environment metadata they were built against.
struct ModelBundle {
    MSTHParams msth;
    MSTHSchedule schedule;
    WMConfig wm_cfg;
    AEConfig ae_cfg;
    ParamStore store;
    WorldModel wm;
    ActionExpert ae;
    int stage = 0;  // 0 fresh, 1 after stage-1, 2 after stage-2
    uint64_t env_fingerprint = 0;
    int grid = 16;
    uint64_t init_seed = 0;

    // Builds both networks with consistent layer counts and schedule-derived
    // frame/row counts; wm.frames and ae.proximal/distal are overwritten from
    // the schedule.
    static ModelBundle create(const MSTHParams& msth, WMConfig wm_cfg, AEConfig ae_cfg,
                              uint64_t init_seed, uint64_t env_fingerprint, int grid);

    void validate_consistent() const;
    uint64_t base_checksum() const;     // frozen-weight freeze probe
    uint64_t adapter_checksum() const;  // adapter tensors only
};

}  // namespace a2g
