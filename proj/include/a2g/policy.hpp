#pragma once

#include <string>
#include <vector>

#include "a2g/bundle.hpp"
#include "a2g/rng.hpp"
#include "a2g/simenv.hpp"

namespace a2g {

// One control cycle's prediction. Rows are MSTH-ordered: P dense proximal
// actions then M distal guidance actions. Only the first exec_prefix proximal
// rows are ever executed; distal rows are retained for logging.
struct PolicyOutput {
    Tensor actions;  // [(P+M) x action_dim], dx/dy clipped to env bounds
    int exec_prefix = 0;
    Tensor executed() const;
};

// encode obs + goal -> imagine latent frames -> denoise actions -> clip.
PolicyOutput act(const ModelBundle& bundle, const Observation& obs, const GoalSpec& goal,
                 const EnvConfig& cfg, Rng seed_rng);

struct EpisodeResult {
    uint64_t seed = 0;
    bool success = false;
    int cycles = 0;
    int steps = 0;
    bool disturbed = false;
    std::string len_class;
    double mean_exec_magnitude = 0.0;
    double act_seconds_total = 0.0;  // wall-clock spent in act(); reporting only
};

// Receding-horizon rollout: act, execute exec_prefix steps (stopping early on
// success), re-plan. Disturbance, when requested, fires once before cycle 2.
EpisodeResult run_episode(const EnvConfig& cfg, const ModelBundle& bundle, uint64_t env_seed,
                          bool disturb, Rng policy_rng);

struct EvalSummary {
    int episodes = 0;
    int successes = 0;
    double success_rate = 0.0;
    double mean_act_seconds = 0.0;
};

EvalSummary evaluate_policy(const EnvConfig& cfg, const ModelBundle& bundle, int episodes,
                            uint64_t eval_seed, bool disturb, Rng policy_rng,
                            std::vector<EpisodeResult>* out_episodes);

}  // namespace a2g
