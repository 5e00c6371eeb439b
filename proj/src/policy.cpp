#include "a2g/policy.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace a2g {

namespace {

double clamp_abs(double v, double bound) { return std::min(bound, std::max(-bound, v)); }

Action row_to_env_action(const Tensor& actions, int row, double a_max) {
    Action a;
    a.dx = clamp_abs(actions.at(row, 0), a_max);
    a.dy = clamp_abs(actions.at(row, 1), a_max);
    a.grip = actions.at(row, 2) > 0.5;
    return a;
}

}  // namespace

Tensor PolicyOutput::executed() const {
    Tensor out = Tensor::zeros({exec_prefix, actions.cols()});
    for (int i = 0; i < exec_prefix; ++i) {
        for (int j = 0; j < actions.cols(); ++j) {
            out.at(i, j) = actions.at(i, j);
        }
    }
    return out;
}

PolicyOutput act(const ModelBundle& bundle, const Observation& obs, const GoalSpec& goal,
                 const EnvConfig& cfg, Rng seed_rng) {
    const Tensor z_t = bundle.wm.encode(bundle.store, obs.image);
    const Tensor z_g = bundle.wm.encode(bundle.store, goal.goal_image);
    const WorldModel::Generated gen =
        bundle.wm.generate(bundle.store, z_t, z_g, bundle.wm_cfg.denoise_steps, seed_rng.fork(1));
    Tensor actions = bundle.ae.generate(bundle.store, gen.feats, obs.proprio,
                                        bundle.ae_cfg.denoise_steps, seed_rng.fork(2));
    for (int r = 0; r < actions.rows(); ++r) {
        actions.at(r, 0) = clamp_abs(actions.at(r, 0), cfg.a_max);
        actions.at(r, 1) = clamp_abs(actions.at(r, 1), cfg.a_max);
        actions.at(r, 2) = std::min(1.0, std::max(0.0, actions.at(r, 2)));
    }
    PolicyOutput out;
    out.actions = std::move(actions);
    out.exec_prefix = bundle.ae_cfg.exec_prefix;
    return out;
}

EpisodeResult run_episode(const EnvConfig& cfg, const ModelBundle& bundle, uint64_t env_seed,
                          bool disturb, Rng policy_rng) {
    const ResetResult rr = reset(cfg, env_seed);
    EpisodeResult res;
    res.seed = env_seed;
    res.disturbed = disturb;
    res.len_class = length_class(cfg, rr.state);

    WorldState state = rr.state;
    Observation obs = rr.obs;
    const int limit = episode_step_limit(cfg, static_cast<int>(rr.state.blocks.size()));
    const int max_cycles = (limit + bundle.ae_cfg.exec_prefix - 1) / bundle.ae_cfg.exec_prefix;
    const int proximal_rows = bundle.ae_cfg.proximal;

    double exec_mag = 0.0;
    int exec_count = 0;
    bool done = success(state, rr.goal, cfg);
    for (int cycle = 0; cycle < max_cycles && !done; ++cycle) {
        if (disturb && cycle == 1) {
            state = inject_disturbance(state, cfg, env_seed);
            obs = observe(state, cfg);
        }
        const auto t0 = std::chrono::steady_clock::now();
        const PolicyOutput pol = act(bundle, obs, rr.goal, cfg, policy_rng.fork(static_cast<uint64_t>(cycle)));
        res.act_seconds_total +=
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        for (int j = 0; j < pol.exec_prefix; ++j) {
            if (j >= proximal_rows) {
                throw std::logic_error("rollout: attempted to execute a distal action row");
            }
            const Action a = row_to_env_action(pol.actions, j, cfg.a_max);
            exec_mag += std::hypot(a.dx, a.dy);
            exec_count += 1;
            state = step(state, a, cfg);
            res.steps += 1;
            if (success(state, rr.goal, cfg)) {
                done = true;
                break;
            }
        }
        obs = observe(state, cfg);
        res.cycles = cycle + 1;
    }
    res.success = done || success(state, rr.goal, cfg);
    res.mean_exec_magnitude = exec_count > 0 ? exec_mag / exec_count : 0.0;
    return res;
}

EvalSummary evaluate_policy(const EnvConfig& cfg, const ModelBundle& bundle, int episodes,
                            uint64_t eval_seed, bool disturb, Rng policy_rng,
                            std::vector<EpisodeResult>* out_episodes) {
    EvalSummary s;
    s.episodes = episodes;
    double act_seconds = 0.0;
    int act_cycles = 0;
    for (int e = 0; e < episodes; ++e) {
        const uint64_t seed = eval_seed + static_cast<uint64_t>(e);
        EpisodeResult r =
            run_episode(cfg, bundle, seed, disturb, policy_rng.fork(static_cast<uint64_t>(e)));
        s.successes += r.success ? 1 : 0;
        act_seconds += r.act_seconds_total;
        act_cycles += r.cycles;
        if (out_episodes) {
            out_episodes->push_back(std::move(r));
        }
    }
    s.success_rate = episodes > 0 ? static_cast<double>(s.successes) / episodes : 0.0;
    s.mean_act_seconds = act_cycles > 0 ? act_seconds / act_cycles : 0.0;
    return s;
}

}  // namespace a2g
