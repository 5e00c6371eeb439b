#include "a2g/onlinehpr.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace a2g {

namespace {

constexpr uint64_t kCollectTag = 1;
constexpr uint64_t kUpdateTag = 2;
constexpr uint64_t kEvalSeedTag = 3;
constexpr uint64_t kEvalPolicyTag = 4;

double clamp_abs(double v, double bound) { return std::min(bound, std::max(-bound, v)); }

// Graph-mode sampling for the literal Algorithm-1 regression loss: both
// denoisers unrolled on the tape so adapter gradients flow through the
// samplers.
Var build_regression_loss(GraphBinding& g, const ModelBundle& bundle, const TrainingExample& ex,
                          Rng& noise_rng) {
    Tape& t = g.tape();
    const Var z_t = bundle.wm.encode_graph(g, ex.anchor_image);
    const Var z_g = bundle.wm.encode_graph(g, ex.goal_image);
    const WMConfig& wc = bundle.wm_cfg;
    Var z = g.constant(Tensor::randn({wc.frames, wc.d_z}, noise_rng));
    std::vector<Var> feats;
    const double inv_nv = 1.0 / wc.denoise_steps;
    for (int n = 0; n < wc.denoise_steps; ++n) {
        const WorldModel::Forward f = bundle.wm.forward(g, z, z_t, z_g, n * inv_nv);
        z = t.add(z, t.scale(f.velocity, inv_nv));
        if (n == wc.denoise_steps - 1) {
            feats = f.feats;
        }
    }
    const AEConfig& ac = bundle.ae_cfg;
    Var a = g.constant(Tensor::randn({ac.rows(), ac.action_dim}, noise_rng));
    const Var prop = g.constant(ex.proprio.as_row());
    const double inv_na = 1.0 / ac.denoise_steps;
    for (int n = 0; n < ac.denoise_steps; ++n) {
        const Var v = bundle.ae.forward(g, a, feats, prop, n * inv_na);
        a = t.add(a, t.scale(v, inv_na));
    }
    return t.mse(a, g.constant(ex.action_targets));
}

}  // namespace

void Transition::validate(int exec_prefix) const {
    if (action_block.rows() != exec_prefix) {
        throw std::invalid_argument("transition: action block has " +
                                    std::to_string(action_block.rows()) + " rows, expected " +
                                    std::to_string(exec_prefix));
    }
}

const char* strategy_name(Strategy s) {
    switch (s) {
        case Strategy::All: return "all";
        case Strategy::SuccessOnly: return "success_only";
        case Strategy::FailedOnly: return "failed_only";
    }
    return "?";
}

Strategy strategy_from_name(const std::string& name) {
    if (name == "all") return Strategy::All;
    if (name == "success_only") return Strategy::SuccessOnly;
    if (name == "failed_only") return Strategy::FailedOnly;
    throw std::invalid_argument("unknown strategy '" + name +
                                "' (expected all, success_only or failed_only)");
}

void RoundConfig::validate() const {
    if (buffer_capacity < 1) {
        throw std::invalid_argument("round config: buffer capacity must be >= 1");
    }
    if (epochs < 1 || batch < 1 || adapter_lr <= 0.0 || max_cycles < 0) {
        throw std::invalid_argument("round config: bad epochs/batch/lr/max_cycles");
    }
}

TrainingExample relabel(const Transition& tr, const MSTHSchedule& sched) {
    TrainingExample ex;
    ex.anchor_image = tr.o.image;
    ex.goal_image = tr.o_prime.image;  // achieved visual state becomes the goal
    ex.proprio = tr.c_p;
    ex.visual_targets.assign(static_cast<size_t>(sched.frame_count()), tr.o_prime.image);
    const int rows = sched.action_rows();
    const int dim = tr.action_block.cols();
    ex.action_targets = Tensor::zeros({rows, dim});
    for (int r = 0; r < std::min(tr.action_block.rows(), rows); ++r) {
        for (int c = 0; c < dim; ++c) {
            ex.action_targets.at(r, c) = tr.action_block.at(r, c);
        }
    }
    return ex;
}

std::vector<Transition> collect_transitions(const EnvConfig& cfg, const ModelBundle& bundle,
                                            int want, int max_cycles, Rng rng,
                                            CollectStats* stats) {
    std::vector<Transition> buffer;
    buffer.reserve(static_cast<size_t>(want));
    const int exec = bundle.ae_cfg.exec_prefix;
    uint64_t episode = 0;
    while (static_cast<int>(buffer.size()) < want) {
        Rng ep_rng = rng.fork(episode);
        const uint64_t env_seed = ep_rng.next_u64() >> 16;  // keep reset seeds modest
        const ResetResult rr = reset(cfg, env_seed);
        WorldState state = rr.state;
        Observation obs = rr.obs;
        const int limit = episode_step_limit(cfg, static_cast<int>(rr.state.blocks.size()));
        const int cycles = max_cycles > 0 ? max_cycles : (limit + exec - 1) / exec;
        std::vector<Transition> episode_transitions;
        bool done = success(state, rr.goal, cfg);
        for (int cycle = 0; cycle < cycles && !done; ++cycle) {
            Transition tr;
            tr.o = obs;
            tr.c_p = obs.proprio;
            const PolicyOutput pol =
                act(bundle, obs, rr.goal, cfg, ep_rng.fork(static_cast<uint64_t>(cycle)));
            tr.action_block = Tensor::zeros({exec, bundle.ae_cfg.action_dim});
            for (int j = 0; j < exec; ++j) {
                Action a;
                a.dx = clamp_abs(pol.actions.at(j, 0), cfg.a_max);
                a.dy = clamp_abs(pol.actions.at(j, 1), cfg.a_max);
                a.grip = pol.actions.at(j, 2) > 0.5;
                if (done) {
                    break;  // remaining rows stay as the zero action
                }
                tr.action_block.at(j, 0) = a.dx;
                tr.action_block.at(j, 1) = a.dy;
                tr.action_block.at(j, 2) = a.grip ? 1.0 : 0.0;
                state = step(state, a, cfg);
                if (success(state, rr.goal, cfg)) {
                    done = true;
                }
            }
            obs = observe(state, cfg);
            tr.o_prime = obs;
            episode_transitions.push_back(std::move(tr));
        }
        const bool episode_success = success(state, rr.goal, cfg);
        if (stats) {
            stats->episodes += 1;
            stats->successes += episode_success ? 1 : 0;
        }
        for (Transition& tr : episode_transitions) {
            if (static_cast<int>(buffer.size()) >= want) {
                break;
            }
            tr.success_flag = episode_success;
            buffer.push_back(std::move(tr));
        }
        episode += 1;
    }
    return buffer;
}

std::vector<int> filter_transitions(const std::vector<Transition>& buffer, Strategy strategy) {
    std::vector<int> out;
    for (size_t i = 0; i < buffer.size(); ++i) {
        const bool keep = strategy == Strategy::All ||
                          (strategy == Strategy::SuccessOnly && buffer[i].success_flag) ||
                          (strategy == Strategy::FailedOnly && !buffer[i].success_flag);
        if (keep) {
            out.push_back(static_cast<int>(i));
        }
    }
    return out;
}

double adapter_update_pass(ModelBundle& bundle, const std::vector<Transition>& buffer,
                           const std::vector<int>& selected, const RoundConfig& cfg,
                           OptimizerState& opt, Rng rng) {
    if (selected.empty()) {
        return 0.0;
    }
    std::vector<TrainingExample> examples;
    examples.reserve(selected.size());
    for (int i : selected) {
        buffer[static_cast<size_t>(i)].validate(bundle.ae_cfg.exec_prefix);
        examples.push_back(relabel(buffer[static_cast<size_t>(i)], bundle.schedule));
    }
    const std::vector<int> train_idx = bundle.store.indices_of(TrainMode::AdapterOnly);
    double loss_sum = 0.0;
    int updates = 0;
    const int n = static_cast<int>(examples.size());
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng ep_rng = rng.fork(static_cast<uint64_t>(epoch));
        std::vector<int> order(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            order[static_cast<size_t>(i)] = i;
        }
        for (int i = n - 1; i > 0; --i) {
            std::swap(order[static_cast<size_t>(i)],
                      order[static_cast<size_t>(ep_rng.uniform_int(i + 1))]);
        }
        for (int start = 0; start < n; start += cfg.batch) {
            const int end = std::min(n, start + cfg.batch);
            Tape tape;
            GraphBinding bind(tape, bundle.store, TrainMode::AdapterOnly, true);
            std::vector<Var> losses;
            Rng batch_rng = ep_rng.fork(0x5000 + static_cast<uint64_t>(start));
            for (int k = start; k < end; ++k) {
                const TrainingExample& ex = examples[static_cast<size_t>(order[static_cast<size_t>(k)])];
                if (cfg.literal_regression) {
                    losses.push_back(build_regression_loss(bind, bundle, ex, batch_rng));
                } else {
                    const ExampleLossVars l =
                        build_example_losses(bind, bundle.wm, bundle.ae, ex, batch_rng);
                    losses.push_back(l.loss_a);  // stage-2 objective
                }
            }
            const Var total = tape.mean_all(tape.concat_rows(losses));
            loss_sum += tape.val(total).data[0];
            updates += 1;
            tape.backward(total);
            std::vector<Tensor> grads;
            std::vector<Tensor*> pvals;
            std::vector<const Tensor*> pgrads;
            grads.reserve(train_idx.size());
            for (int idx : train_idx) {
                grads.push_back(bind.grad_of(idx));
            }
            for (size_t k = 0; k < train_idx.size(); ++k) {
                pvals.push_back(&bundle.store.at(train_idx[k]).value);
                pgrads.push_back(&grads[k]);
            }
            optimizer_step(pvals, pgrads, opt);
        }
    }
    return updates > 0 ? loss_sum / updates : 0.0;
}

RoundReport online_round(const EnvConfig& cfg, ModelBundle& bundle, const RoundConfig& rcfg,
                         int round_index, uint64_t seed) {
    rcfg.validate();
    Rng round_rng = Rng(seed).fork(stream::kOnline).fork(static_cast<uint64_t>(round_index));
    CollectStats stats;
    const std::vector<Transition> buffer = collect_transitions(
        cfg, bundle, rcfg.buffer_capacity, rcfg.max_cycles, round_rng.fork(kCollectTag), &stats);
    const std::vector<int> selected = filter_transitions(buffer, rcfg.strategy);
    RoundReport rep;
    rep.round = round_index;
    rep.rollouts = stats.episodes;
    rep.successes = stats.successes;
    rep.buffer_used = static_cast<int>(selected.size());
    if (!selected.empty()) {
        // fresh optimizer state per round keeps rounds independent, so a run
        // resumed from a snapshot continues bit-identically
        OptimizerState opt;
        opt.lr = rcfg.adapter_lr;
        rep.mean_loss =
            adapter_update_pass(bundle, buffer, selected, rcfg, opt, round_rng.fork(kUpdateTag));
    }
    return rep;  // buffer destructs here: cleared at every round boundary
}

ImprovementRun run_improvement(const EnvConfig& cfg, ModelBundle& bundle, int rounds,
                               int eval_episodes, const RoundConfig& rcfg, uint64_t seed,
                               int start_round, const SnapshotFn& snapshot) {
    if (rounds < 0 || start_round < 0 || start_round > rounds) {
        throw std::invalid_argument("run_improvement: bad round range");
    }
    Rng root(seed);
    const uint64_t eval_seed_base = root.fork(kEvalSeedTag).next_u64() >> 16;
    auto eval_now = [&]() {
        return evaluate_policy(cfg, bundle, eval_episodes, eval_seed_base, false,
                               root.fork(kEvalPolicyTag), nullptr)
            .success_rate;
    };
    ImprovementRun run;
    if (start_round == 0) {
        RoundReport base;
        base.round = 0;
        base.eval_success_rate = eval_now();
        run.reports.push_back(base);
    }
    for (int r = start_round + 1; r <= rounds; ++r) {
        RoundReport rep = online_round(cfg, bundle, rcfg, r, seed);
        rep.eval_success_rate = eval_now();
        if (snapshot) {
            snapshot(r, bundle);
        }
        run.reports.push_back(rep);
    }
    return run;
}

}  // namespace a2g
