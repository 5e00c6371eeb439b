#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "a2g/msth.hpp"
#include "a2g/rng.hpp"
#include "oracles.hpp"

using namespace a2g;

namespace {

Trajectory counter_trajectory(int frames, int grid = 4) {
    // frame i stores the value i in every pixel / proprio / action slot
    Trajectory tr;
    for (int i = 0; i < frames; ++i) {
        tr.images.push_back(Tensor::full({grid, grid}, static_cast<double>(i)));
        tr.proprios.push_back(Tensor::full({3}, static_cast<double>(i)));
    }
    tr.actions = Tensor::zeros({frames - 1, 3});
    for (int i = 0; i < frames - 1; ++i) {
        for (int c = 0; c < 3; ++c) {
            tr.actions.at(i, c) = static_cast<double>(i);
        }
    }
    tr.goal_image = tr.images.back();
    return tr;
}

MSTHParams random_valid_params(Rng& rng) {
    while (true) {
        MSTHParams p;
        p.total_horizon = 3 + rng.uniform_int(300);
        p.proximal_horizon = 1 + rng.uniform_int(p.total_horizon - 1);
        const int room = p.total_horizon - p.proximal_horizon;
        if (room < 1) {
            continue;
        }
        p.distal_count = 1 + rng.uniform_int(std::min(room, 12));
        // stride must divide P
        std::vector<int> divisors;
        for (int r = 1; r <= p.proximal_horizon; ++r) {
            if (p.proximal_horizon % r == 0) {
                divisors.push_back(r);
            }
        }
        p.vision_stride = divisors[static_cast<size_t>(rng.uniform_int(static_cast<int>(divisors.size())))];
        p.validate();
        return p;
    }
}

}  // namespace

TEST_CASE("schedule: pinned formula values") {
    MSTHParams p;
    p.total_horizon = 100;
    p.proximal_horizon = 10;
    p.vision_stride = 2;
    p.distal_count = 3;
    const MSTHSchedule s = compute_schedule(p);
    CHECK(s.distal_offsets == std::vector<int>{55, 81, 100});  // note 90*ln2/ln4 = 45 exactly
    CHECK(s.proximal_vision_offsets == std::vector<int>{2, 4, 6, 8, 10});
    CHECK(s.proximal_action_offsets == std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
    CHECK(s.frame_count() == 8);
    CHECK(s.action_rows() == 13);
}

TEST_CASE("schedule: M = 1 forces the single distal anchor to K") {
    for (int k : {5, 17, 64, 301}) {
        MSTHParams p;
        p.total_horizon = k;
        p.proximal_horizon = 3;
        p.vision_stride = 1;
        p.distal_count = 1;
        CHECK(compute_schedule(p).distal_offsets == std::vector<int>{k});
    }
}

TEST_CASE("schedule: appendix-ratio case 9 proximal + 9 distal") {
    MSTHParams p;
    p.total_horizon = 18;
    p.proximal_horizon = 9;
    p.vision_stride = 1;
    p.distal_count = 9;
    const MSTHSchedule s = compute_schedule(p);
    CHECK(s.proximal_vision_offsets.size() == 9);
    CHECK(s.distal_offsets.size() == 9);
    // raw floors collide at 16 and 17; de-duplication spreads the nine
    // anchors over the only feasible set (9, 18]
    CHECK(s.distal_offsets == std::vector<int>{10, 11, 12, 13, 14, 15, 16, 17, 18});
}

TEST_CASE("schedule: fixed-horizon baseline (M = 0)") {
    MSTHParams p;
    p.total_horizon = 8;
    p.proximal_horizon = 8;
    p.vision_stride = 2;
    p.distal_count = 0;
    const MSTHSchedule s = compute_schedule(p);
    CHECK(s.distal_offsets.empty());
    CHECK(s.frame_count() == 4);
    CHECK(s.action_rows() == 8);
}

TEST_CASE("schedule: integer gaps can wobble one step above the real spacing") {
    // 10*ln2/ln4 = 5 exactly, so d_1 = 15 while d_2 floors to 17: the integer
    // gap sequence [2, 3] increases even though the continuous spacing
    // decreases. Kept as a pinned reminder that gap monotonicity only holds
    // up to the floor's rounding unit.
    MSTHParams p;
    p.total_horizon = 20;
    p.proximal_horizon = 10;
    p.vision_stride = 1;
    p.distal_count = 3;
    CHECK(compute_schedule(p).distal_offsets == std::vector<int>{15, 17, 20});
}

TEST_CASE("schedule: invariant violations are named") {
    MSTHParams p;
    p.total_horizon = 10;
    p.proximal_horizon = 10;
    p.vision_stride = 1;
    p.distal_count = 2;  // K > P violated
    CHECK_THROWS_WITH_AS(compute_schedule(p), "msth params: violated constraint: K > P",
                         std::invalid_argument);
    p.total_horizon = 12;
    p.vision_stride = 3;
    CHECK_THROWS_WITH_AS(compute_schedule(p), "msth params: violated constraint: r divides P",
                         std::invalid_argument);
    p.vision_stride = 1;
    p.distal_count = 5;  // K - P = 2 < M
    CHECK_THROWS_WITH_AS(compute_schedule(p), "msth params: violated constraint: K - P >= M",
                         std::invalid_argument);
}

TEST_CASE("schedule property suite: 1000 random valid parameter sets") {
    Rng rng(100);
    int wobble_cases = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const MSTHParams p = random_valid_params(rng);
        const MSTHSchedule s = compute_schedule(p);
        const int M = p.distal_count;
        REQUIRE(static_cast<int>(s.distal_offsets.size()) == M);
        // horizon anchor
        CHECK(s.distal_offsets.back() == p.total_horizon);
        // strict monotonicity, all anchors beyond the proximal horizon
        for (int i = 0; i < M; ++i) {
            CHECK(s.distal_offsets[static_cast<size_t>(i)] > p.proximal_horizon);
            if (i > 0) {
                CHECK(s.distal_offsets[static_cast<size_t>(i)] >
                      s.distal_offsets[static_cast<size_t>(i - 1)]);
            }
        }
        // logarithm-base invariance: the raw formula evaluated in bases e, 2
        // and 10 floors identically
        const auto de = oracle::raw_distal(p.total_horizon, p.proximal_horizon, M, std::exp(1.0));
        const auto d2 = oracle::raw_distal(p.total_horizon, p.proximal_horizon, M, 2.0);
        const auto d10 = oracle::raw_distal(p.total_horizon, p.proximal_horizon, M, 10.0);
        CHECK(de == d2);
        CHECK(de == d10);
        // interval structure: the continuous spacing strictly decreases;
        // integer gaps inherit it up to the floor's rounding unit (+1)
        for (int m = 1; m + 1 < M; ++m) {
            const double real_gap_m = (p.total_horizon - p.proximal_horizon) *
                                      std::log((m + 2.0) / (m + 1.0)) / std::log(M + 1.0);
            const double real_gap_next = (p.total_horizon - p.proximal_horizon) *
                                         std::log((m + 3.0) / (m + 2.0)) / std::log(M + 1.0);
            CHECK(real_gap_next < real_gap_m);
            const int gap_m = s.distal_offsets[static_cast<size_t>(m)] -
                              s.distal_offsets[static_cast<size_t>(m - 1)];
            const int gap_next = s.distal_offsets[static_cast<size_t>(m + 1)] -
                                 s.distal_offsets[static_cast<size_t>(m)];
            CHECK(gap_next <= gap_m + 1);
            wobble_cases += gap_next > gap_m ? 1 : 0;
        }
    }
    // the +1 allowance is real, not hypothetical
    CHECK(wobble_cases > 0);
}

TEST_CASE("slice_trajectory: anchor at trajectory end clamps everything") {
    const Trajectory tr = counter_trajectory(6);
    MSTHParams p;
    p.total_horizon = 12;
    p.proximal_horizon = 4;
    p.vision_stride = 2;
    p.distal_count = 2;
    const MSTHSchedule s = compute_schedule(p);
    const MSTHTarget tgt = slice_trajectory(tr, 5, s);
    for (const Tensor& img : tgt.visual_targets) {
        CHECK(img.data[0] == 5.0);  // terminal frame
    }
    CHECK(norm(tgt.action_targets) == 0.0);  // stay action everywhere
}

TEST_CASE("slice_trajectory: long trajectory is exact frame lookup") {
    const Trajectory tr = counter_trajectory(120);
    MSTHParams p;
    p.total_horizon = 100;
    p.proximal_horizon = 10;
    p.vision_stride = 2;
    p.distal_count = 3;
    const MSTHSchedule s = compute_schedule(p);
    const int anchor = 7;
    const MSTHTarget tgt = slice_trajectory(tr, anchor, s);
    const std::vector<int> expect_vis = {2, 4, 6, 8, 10, 55, 81, 100};
    REQUIRE(tgt.visual_targets.size() == expect_vis.size());
    for (size_t i = 0; i < expect_vis.size(); ++i) {
        CHECK(tgt.visual_targets[i].data[0] == static_cast<double>(anchor + expect_vis[i]));
    }
    const std::vector<int> aoffs = s.action_offsets();
    for (size_t row = 0; row < aoffs.size(); ++row) {
        // action taken at the step leading into anchor+offset
        CHECK(tgt.action_targets.at(static_cast<int>(row), 0) ==
              static_cast<double>(anchor + aoffs[row] - 1));
    }
}

TEST_CASE("slice_trajectory: purity and errors") {
    const Trajectory tr = counter_trajectory(9);
    MSTHParams p;
    p.total_horizon = 6;
    p.proximal_horizon = 2;
    p.vision_stride = 1;
    p.distal_count = 2;
    const MSTHSchedule s = compute_schedule(p);
    const MSTHTarget a = slice_trajectory(tr, 3, s);
    const MSTHTarget b = slice_trajectory(tr, 3, s);
    CHECK(tensor_checksum(a.action_targets) == tensor_checksum(b.action_targets));
    for (size_t i = 0; i < a.visual_targets.size(); ++i) {
        CHECK(tensor_checksum(a.visual_targets[i]) == tensor_checksum(b.visual_targets[i]));
    }
    CHECK_THROWS_AS(slice_trajectory(tr, 9, s), std::invalid_argument);
    Trajectory empty;
    CHECK_THROWS_AS(slice_trajectory(empty, 0, s), std::invalid_argument);
}
