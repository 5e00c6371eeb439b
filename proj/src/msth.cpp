#include "a2g/msth.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace a2g {

void Trajectory::validate() const {
    if (images.empty()) {
        throw std::invalid_argument("trajectory: empty");
    }
    if (static_cast<int>(images.size()) != actions.rows() + 1 ||
        images.size() != proprios.size()) {
        throw std::invalid_argument("trajectory: expected len(actions) == len(observations) - 1");
    }
}

void MSTHParams::validate() const {
    auto fail = [](const std::string& what) {
        throw std::invalid_argument("msth params: violated constraint: " + what);
    };
    if (distal_count < 0) {
        fail("M >= 0");
    }
    if (distal_count == 0) {
        // fixed-horizon baseline: the imagined horizon collapses to the proximal window
        if (total_horizon != proximal_horizon) {
            fail("M == 0 requires K == P");
        }
    } else if (total_horizon <= proximal_horizon) {
        fail("K > P");
    }
    if (proximal_horizon < vision_stride) {
        fail("P >= r");
    }
    if (vision_stride < 1) {
        fail("r >= 1");
    }
    if (proximal_horizon % vision_stride != 0) {
        fail("r divides P");
    }
    if (distal_count >= 1 && total_horizon - proximal_horizon < distal_count) {
        fail("K - P >= M");
    }
}

uint64_t MSTHParams::fingerprint() const {
    uint64_t h = 0xcbf29ce484222325ull;
    for (int x : {total_horizon, proximal_horizon, vision_stride, distal_count}) {
        h ^= static_cast<uint64_t>(static_cast<uint32_t>(x));
        h *= 0x100000001b3ull;
    }
    return h;
}

std::vector<int> MSTHSchedule::vision_offsets() const {
    std::vector<int> out = proximal_vision_offsets;
    out.insert(out.end(), distal_offsets.begin(), distal_offsets.end());
    return out;
}

std::vector<int> MSTHSchedule::action_offsets() const {
    std::vector<int> out = proximal_action_offsets;
    out.insert(out.end(), distal_offsets.begin(), distal_offsets.end());
    return out;
}

int MSTHSchedule::frame_count() const {
    return static_cast<int>(proximal_vision_offsets.size() + distal_offsets.size());
}

int MSTHSchedule::action_rows() const {
    return static_cast<int>(proximal_action_offsets.size() + distal_offsets.size());
}

MSTHSchedule compute_schedule(const MSTHParams& p) {
    p.validate();
    MSTHSchedule s;
    for (int k = 1; k <= p.proximal_horizon / p.vision_stride; ++k) {
        s.proximal_vision_offsets.push_back(k * p.vision_stride);
    }
    for (int j = 1; j <= p.proximal_horizon; ++j) {
        s.proximal_action_offsets.push_back(j);
    }
    const int K = p.total_horizon;
    const int P = p.proximal_horizon;
    const int M = p.distal_count;
    if (M == 0) {
        return s;
    }
    s.distal_offsets.resize(static_cast<size_t>(M));
    const double denom = std::log(static_cast<double>(M + 1));
    for (int m = 1; m < M; ++m) {
        // the 1e-9 guard keeps exact-integer ratios (e.g. log2/log4) from
        // flooring one below their real value
        const double q = static_cast<double>(K - P) * (std::log(static_cast<double>(m + 1)) / denom);
        s.distal_offsets[static_cast<size_t>(m - 1)] = P + static_cast<int>(std::floor(q + 1e-9));
    }
    s.distal_offsets[static_cast<size_t>(M - 1)] = K;  // log(M+1)/log(M+1) == 1 exactly
    // de-duplicate floors: bump the later index, then make room below the
    // pinned horizon anchor; feasible because K - P >= M
    for (int i = 1; i < M; ++i) {
        if (s.distal_offsets[static_cast<size_t>(i)] <= s.distal_offsets[static_cast<size_t>(i - 1)]) {
            s.distal_offsets[static_cast<size_t>(i)] = s.distal_offsets[static_cast<size_t>(i - 1)] + 1;
        }
    }
    s.distal_offsets[static_cast<size_t>(M - 1)] = K;
    for (int i = M - 2; i >= 0; --i) {
        if (s.distal_offsets[static_cast<size_t>(i)] >= s.distal_offsets[static_cast<size_t>(i + 1)]) {
            s.distal_offsets[static_cast<size_t>(i)] = s.distal_offsets[static_cast<size_t>(i + 1)] - 1;
        }
    }
    return s;
}

MSTHTarget slice_trajectory(const Trajectory& traj, int anchor_t, const MSTHSchedule& sched) {
    traj.validate();
    const int last = traj.length() - 1;
    if (anchor_t < 0 || anchor_t > last) {
        throw std::invalid_argument("slice_trajectory: anchor " + std::to_string(anchor_t) +
                                    " outside trajectory of length " + std::to_string(traj.length()));
    }
    MSTHTarget out;
    out.anchor_index = anchor_t;
    for (int off : sched.vision_offsets()) {
        const int idx = std::min(anchor_t + off, last);
        out.visual_targets.push_back(traj.images[static_cast<size_t>(idx)]);
    }
    const std::vector<int> aoffs = sched.action_offsets();
    const int action_dim = traj.actions.cols();
    out.action_targets = Tensor::zeros({static_cast<int>(aoffs.size()), action_dim});
    for (size_t row = 0; row < aoffs.size(); ++row) {
        const int idx = anchor_t + aoffs[row] - 1;  // action taken at that step
        if (idx <= last - 1) {
            for (int c = 0; c < action_dim; ++c) {
                out.action_targets.at(static_cast<int>(row), c) = traj.actions.at(idx, c);
            }
        }
        // otherwise: stay action (all zeros) — remain at the achieved goal
    }
    return out;
}

}  // namespace a2g
