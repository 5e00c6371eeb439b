#pragma once

#include <cstdint>
#include <vector>

#include "a2g/tensor.hpp"
#include "a2g/trajectory.hpp"

namespace a2g {

// Multi-scale temporal hashing parameters: total imagined horizon, dense
// proximal horizon, vision sampling stride, distal anchor count.
struct MSTHParams {
    int total_horizon = 32;    // K
    int proximal_horizon = 8;  // P
    int vision_stride = 2;     // r
    int distal_count = 3;      // M

    // M >= 1 requires K > P >= r >= 1, r | P, K - P >= M.
    // M == 0 is the fixed-horizon baseline: no distal anchors, K == P.
    void validate() const;
    uint64_t fingerprint() const;
};

struct MSTHSchedule {
    std::vector<int> proximal_vision_offsets;  // r, 2r, ..., P
    std::vector<int> distal_offsets;           // d_1..d_M, strictly increasing, in (P, K], d_M == K
    std::vector<int> proximal_action_offsets;  // 1..P

    // distal action offsets coincide with distal vision offsets
    std::vector<int> vision_offsets() const;  // proximal then distal
    std::vector<int> action_offsets() const;  // 1..P then distal
    int frame_count() const;                  // P/r + M
    int action_rows() const;                  // P + M
};

// d_m = P + floor((K-P) * log(m+1)/log(M+1)), with d_M pinned to K (the ratio
// is exactly 1 there) and duplicate floors de-duplicated by bumping the later
// index, keeping all anchors strictly increasing inside (P, K]. Any logarithm
// base gives the same schedule.
MSTHSchedule compute_schedule(const MSTHParams& params);

// Training targets for one anchor: raw frames at the vision offsets and
// action rows at the action offsets. Offsets past the trajectory end clamp to
// the terminal frame / the all-zero stay action.
struct MSTHTarget {
    std::vector<Tensor> visual_targets;  // frame_count() images
    Tensor action_targets;               // [action_rows() x action_dim]
    int anchor_index = 0;
};

MSTHTarget slice_trajectory(const Trajectory& traj, int anchor_t, const MSTHSchedule& sched);

}  // namespace a2g
