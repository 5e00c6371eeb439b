#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "a2g/rng.hpp"
#include "a2g/tensor.hpp"
#include "a2g/trajectory.hpp"

namespace a2g {

enum class Task { Push, Trace };

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

double dist(const Vec2& a, const Vec2& b);

// Deterministic 2D manipulation environments on the unit workspace.
// Push: carry blocks to goal positions. Trace: visit a waypoint pattern in
// order, leaving a drawn trail.
struct EnvConfig {
    Task task = Task::Push;
    int grid = 16;              // render resolution G
    double a_max = 0.06;        // per-axis action bound
    double success_eps = 0.06;  // closed ball
    int blocks = 1;             // task blocks (push)

    // geometry (workspace units)
    double agent_radius = 0.055;
    double block_radius = 0.07;
    double grip_radius = 0.11;
    double waypoint_radius = 0.045;
    double trail_thickness = 0.022;

    // episode
    int t_max = 90;              // push step budget; trace derives from waypoint count
    double disturb_bound = 0.12;

    // OOD flags
    bool ood_shift_spawn = false;   // blocks+goals spawn in a band unseen in ID
    bool ood_square_blocks = false; // novel block shape
    int ood_distractors = 0;        // extra inert blocks
    bool ood_fresh_patterns = false;  // trace: waypoints sampled outside the library

    // trace waypoint counts; 0 samples uniformly from {3,5,8}
    int trace_count = 0;
    int trace_library = 200;  // ID pattern library size

    void validate() const;
    uint64_t fingerprint() const;
};

struct Action {
    double dx = 0.0;
    double dy = 0.0;
    bool grip = false;
};

struct WorldState {
    Vec2 agent;
    std::vector<Vec2> blocks;  // push: blocks (task first, then distractors); trace: waypoints
    int carrying = -1;
    int progress = 0;  // trace: waypoints visited in order
};

struct Observation {
    Tensor image;    // [G x G] grayscale in [0,1]
    Tensor proprio;  // [agent.x, agent.y, carrying flag]
};

struct GoalSpec {
    WorldState goal_state;
    Tensor goal_image;  // render(goal_state)
};

struct ResetResult {
    WorldState state;
    GoalSpec goal;
    Observation obs;
    std::vector<Vec2> block_goals;  // push only, task blocks
    int expert_steps = 0;           // steps the scripted expert needed
};

// Episode instance: state + goal + the per-instance data the expert needs.
struct EnvInstance {
    EnvConfig cfg;
    WorldState state;
    GoalSpec goal;
    std::vector<Vec2> block_goals;
    uint64_t seed = 0;
};

int episode_step_limit(const EnvConfig& cfg, int waypoint_count);
std::string length_class(const EnvConfig& cfg, const WorldState& s);

// Samples a solvable instance (rejection-sampled against the scripted
// expert); deterministic per seed. Throws after bounded failed attempts.
ResetResult reset(const EnvConfig& cfg, uint64_t seed);

WorldState step(const WorldState& s, const Action& a, const EnvConfig& cfg);
Tensor render(const WorldState& s, const EnvConfig& cfg);
Observation observe(const WorldState& s, const EnvConfig& cfg);
bool success(const WorldState& s, const GoalSpec& g, const EnvConfig& cfg);

// Proportional controller toward the current sub-goal; pure function of
// (state, goal, block goals).
Action scripted_expert(const WorldState& s, const GoalSpec& g,
                       const std::vector<Vec2>& block_goals, const EnvConfig& cfg);

// Push: teleport one block by a bounded random offset. Trace: teleport the
// agent (waypoints define the goal and must stay put).
WorldState inject_disturbance(const WorldState& s, const EnvConfig& cfg, uint64_t seed);

// Expert rollout from a reset instance; terminal state satisfies success and
// the stored goal image is the terminal rendered frame.
Trajectory run_expert_episode(const EnvConfig& cfg, uint64_t seed);

std::vector<Trajectory> generate_demos(const EnvConfig& cfg, int n_episodes, uint64_t seed);

// ID spawn band membership, used by tests and the OOD constructive check.
bool in_id_spawn_region(const Vec2& p);

}  // namespace a2g
