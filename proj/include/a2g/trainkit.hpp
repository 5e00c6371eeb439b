#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "a2g/bundle.hpp"
#include "a2g/msth.hpp"
#include "a2g/params.hpp"
#include "a2g/rng.hpp"
#include "a2g/trajectory.hpp"

namespace a2g {

// Thrown when a file's recorded configuration disagrees with the caller's.
class FingerprintError : public std::runtime_error {
public:
    explicit FingerprintError(const std::string& what) : std::runtime_error(what) {}
};

// --- dataset io ------------------------------------------------------------
// Binary layout: magic "A2G1", u16 format version, u32-length-prefixed UTF-8
// manifest (key=value lines), then per trajectory a fixed field order of
// u32-length-prefixed float32 arrays: images, proprios, actions, goal_image,
// meta([seed]). Little-endian throughout.

struct DatasetManifest {
    uint16_t version = 1;
    int count = 0;
    int grid = 16;
    int action_dim = 3;
    int proprio_dim = 3;
    uint64_t env_fingerprint = 0;
};

void save_dataset(const std::string& path, const std::vector<Trajectory>& trajectories,
                  const DatasetManifest& manifest);
std::vector<Trajectory> load_dataset(const std::string& path, DatasetManifest* manifest_out);

// --- bundle io ---------------------------------------------------------------
// Binary layout: magic "A2GW", u16 format version, u32-length-prefixed header
// (key=value lines carrying every config field), then per tensor: u32 name
// length, name, u32 rank, u32 extents, float64 payload.

void save_bundle(const std::string& path, const ModelBundle& bundle);
ModelBundle load_bundle(const std::string& path);

// FingerprintError when the loaded bundle was built against different
// schedule/network/environment configs than expected.
void require_bundle_matches(const ModelBundle& bundle, const MSTHParams& msth,
                            const WMConfig& wm_cfg, const AEConfig& ae_cfg,
                            uint64_t env_fingerprint);

// --- losses and training ----------------------------------------------------

struct TrainConfig {
    double lambda = 0.1;  // stage-1 balance between visual and action losses
    int batch = 16;
    int steps = 2000;
    double lr = 1e-3;
    uint64_t seed = 1;

    void validate() const;
};

// Model-facing view of one supervised example: raw frames at the schedule's
// vision offsets plus the MSTH-ordered action rows.
struct TrainingExample {
    std::vector<Tensor> visual_targets;
    Tensor anchor_image;
    Tensor goal_image;
    Tensor proprio;         // rank-1
    Tensor action_targets;  // [(P+M) x action_dim]
};

TrainingExample example_from_trajectory(const Trajectory& traj, int anchor,
                                        const MSTHSchedule& sched);

struct ExampleLossVars {
    Var loss_v;
    Var loss_a;
};

// Builds both flow-matching losses for one example on the binding's tape.
// The action-loss path consumes the same forward pass's layer features, so
// action gradients reach the world model. Noise draws come from noise_rng in
// a fixed order: t_v, z0, t_a, a0.
ExampleLossVars build_example_losses(GraphBinding& g, const WorldModel& wm,
                                     const ActionExpert& ae, const TrainingExample& ex,
                                     Rng& noise_rng);

struct TrainStepRow {
    int step = 0;
    double loss_v = 0.0;
    double loss_a = 0.0;
    double total = 0.0;
};

// stage 1 optimizes loss_v + lambda * loss_a over both networks; stage 2
// optimizes loss_a alone, still end-to-end. Divergence aborts with the step
// index. bundle.stage is advanced on success.
std::vector<TrainStepRow> train_stage(ModelBundle& bundle,
                                      const std::vector<Trajectory>& dataset,
                                      const TrainConfig& cfg, int stage);

}  // namespace a2g
