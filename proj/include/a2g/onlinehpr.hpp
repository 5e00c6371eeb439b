#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "a2g/bundle.hpp"
#include "a2g/optim.hpp"
#include "a2g/policy.hpp"
#include "a2g/simenv.hpp"
#include "a2g/trainkit.hpp"

namespace a2g {

// One control cycle of experience. success_flag records whether the episode
// reached its original goal; it exists solely for rollout-selection filtering
// and reporting, and the update path never reads it.
struct Transition {
    Observation o;        // cycle start
    Tensor c_p;           // proprio at cycle start
    Tensor action_block;  // [exec_prefix x action_dim], executed (clipped) actions
    Observation o_prime;  // cycle end
    bool success_flag = false;

    void validate(int exec_prefix) const;
};

enum class Strategy { All, SuccessOnly, FailedOnly };
const char* strategy_name(Strategy s);
Strategy strategy_from_name(const std::string& name);

struct RoundConfig {
    int buffer_capacity = 20;  // N: transitions per training round
    int epochs = 10;           // passes over the buffer per round
    int batch = 10;
    double adapter_lr = 1e-3;
    Strategy strategy = Strategy::All;
    int max_cycles = 0;  // 0: derived from the env step budget
    bool literal_regression = false;  // plain regression on sampled actions

    void validate() const;
};

// Hindsight relabel: the achieved visual state becomes the goal; recorded
// actions are padded to the MSTH layout with the stay action; all vision
// targets clamp to the chunk-terminal frame (cycle interiors are not
// recorded). No success information is consumed.
TrainingExample relabel(const Transition& tr, const MSTHSchedule& sched);

struct CollectStats {
    int episodes = 0;
    int successes = 0;
};

// Rolls out the current policy with fresh seeded instances until `want`
// transitions are available. Episode flags are stamped after the episode
// finishes; transitions beyond `want` are dropped at episode boundaries.
std::vector<Transition> collect_transitions(const EnvConfig& cfg, const ModelBundle& bundle,
                                            int want, int max_cycles, Rng rng,
                                            CollectStats* stats);

std::vector<int> filter_transitions(const std::vector<Transition>& buffer, Strategy strategy);

// Adapter-only updates with the stage-2 action flow-matching loss on
// relabeled examples (or the literal regression form when configured).
// Returns the mean training loss. Reads nothing but (o, c_p, a, o').
double adapter_update_pass(ModelBundle& bundle, const std::vector<Transition>& buffer,
                           const std::vector<int>& selected, const RoundConfig& cfg,
                           OptimizerState& opt, Rng rng);

struct RoundReport {
    int round = 0;
    int rollouts = 0;
    int successes = 0;
    int buffer_used = 0;
    double mean_loss = 0.0;
    double eval_success_rate = 0.0;
};

// One full Algorithm-1 round: collect until the buffer threshold, filter by
// strategy, run the adapter updates, clear the buffer. An empty post-filter
// buffer skips the update and reports buffer_used = 0.
RoundReport online_round(const EnvConfig& cfg, ModelBundle& bundle, const RoundConfig& rcfg,
                         int round_index, uint64_t seed);

using SnapshotFn = std::function<void(int round, const ModelBundle&)>;

struct ImprovementRun {
    std::vector<RoundReport> reports;  // round 0 baseline first when start_round == 0
};

// Alternates online rounds with frozen-policy evaluation on a fixed seed
// block. All randomness is keyed by (seed, round, episode), so a run resumed
// from a round snapshot continues identically.
ImprovementRun run_improvement(const EnvConfig& cfg, ModelBundle& bundle, int rounds,
                               int eval_episodes, const RoundConfig& rcfg, uint64_t seed,
                               int start_round = 0, const SnapshotFn& snapshot = {});

}  // namespace a2g
